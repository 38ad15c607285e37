//! Binary Netpbm: PGM (`P5`) and PPM (`P6`) with maxval ≤ 255.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PnmKind {
    /// `P5`, one byte per pixel.
    Graymap,
    /// `P6`, three bytes per pixel.
    Pixmap,
}

impl PnmKind {
    pub fn channels(self) -> usize {
        match self {
            PnmKind::Graymap => 1,
            PnmKind::Pixmap => 3,
        }
    }

    fn magic(self) -> &'static [u8; 2] {
        match self {
            PnmKind::Graymap => b"P5",
            PnmKind::Pixmap => b"P6",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PnmImage {
    pub kind: PnmKind,
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    /// Interleaved samples, row-major.
    pub data: Vec<u8>,
}

impl PnmImage {
    pub fn new(kind: PnmKind, width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height * kind.channels(), "sample count");
        Self {
            kind,
            width,
            height,
            maxval: 255,
            data,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + 20);
        out.extend_from_slice(self.kind.magic());
        out.extend_from_slice(format!("\n{} {}\n{}\n", self.width, self.height, self.maxval).as_bytes());
        out.extend_from_slice(&self.data);
        out
    }
}

/// Parse failure with the byte offset where it was detected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub detail: String,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn fail<T>(&self, detail: impl Into<String>) -> std::result::Result<T, ParseError> {
        Err(ParseError {
            offset: self.pos,
            detail: detail.into(),
        })
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, ParseError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            self.pos = start;
            return self.fail(format!("expected {what}"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse().or_else(|_| {
            self.pos = start;
            self.fail(format!("{what} out of range"))
        })
    }
}

pub fn parse_pnm(bytes: &[u8]) -> std::result::Result<PnmImage, ParseError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let kind = match bytes.get(..2) {
        Some(b"P5") => PnmKind::Graymap,
        Some(b"P6") => PnmKind::Pixmap,
        _ => return cur.fail("expected magic number P5 or P6"),
    };
    cur.pos = 2;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    cur.skip_space_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return cur.fail("zero image dimension");
    }
    if !(1..=255).contains(&maxval) {
        cur.pos = maxval_at;
        return cur.fail(format!("unsupported maxval {maxval} (1..=255)"));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return cur.fail("expected single whitespace before raster"),
    }
    let needed = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(kind.channels()))
        .ok_or(ParseError {
            offset: cur.pos,
            detail: "raster size overflows".into(),
        })?;
    let raster = &bytes[cur.pos..];
    if raster.len() < needed {
        cur.pos = bytes.len();
        return cur.fail(format!("raster truncated: need {needed} bytes, have {}", raster.len()));
    }
    if let Some(i) = raster[..needed].iter().position(|&v| v as usize > maxval) {
        cur.pos += i;
        return cur.fail(format!("sample exceeds maxval {maxval}"));
    }
    Ok(PnmImage {
        kind,
        width,
        height,
        maxval: maxval as u8,
        data: raster[..needed].to_vec(),
    })
}

pub fn read_pnm(path: &Path) -> Result<PnmImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pnm(&bytes).map_err(|e| Error::Format {
        path: path.into(),
        offset: e.offset,
        detail: e.detail,
    })
}

pub fn write_pnm(path: &Path, image: &PnmImage) -> Result<()> {
    std::fs::write(path, image.encode()).map_err(|e| Error::io(path, e))
}
