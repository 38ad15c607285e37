//! Dense row-major n-dimensional arrays.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense n-dimensional array stored row-major.
///
/// Feature maps use the `[channels, height, width]` layout and convolution
/// kernels `[out_channels, in_channels, kernel_h, kernel_w]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorOf<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> TensorOf<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::dim("tensor", format!("zero-sized axis in shape {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::dim(
                "tensor",
                format!("shape {shape:?} needs {expected} values, got {}", data.len()),
            ));
        }
        Ok(Self { shape, data })
    }

    /// All-zero tensor. Panics on a zero-sized axis.
    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, T::zero())
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        assert!(shape.iter().all(|&d| d > 0), "zero-sized axis in {shape:?}");
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        assert!(shape.iter().all(|&d| d > 0), "zero-sized axis in {shape:?}");
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: (0..n).map(&mut f).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Interprets the tensor as `[C, H, W]`.
    pub fn dims3(&self) -> Result<(usize, usize, usize)> {
        match *self.shape.as_slice() {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::dim(
                "tensor",
                format!("expected [C,H,W], got shape {:?}", self.shape),
            )),
        }
    }

    #[inline]
    pub fn at3(&self, c: usize, y: usize, x: usize) -> T {
        let (h, w) = (self.shape[1], self.shape[2]);
        self.data[(c * h + y) * w + x]
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> TensorOf<U> {
        TensorOf {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::of(v.as_f64())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Spatial crop `[C, top.., left..]` of size `h × w`.
    pub fn crop(&self, top: usize, left: usize, h: usize, w: usize) -> Result<Self> {
        let (c, ih, iw) = self.dims3()?;
        if h == 0 || w == 0 || top + h > ih || left + w > iw {
            return Err(Error::dim(
                "crop",
                format!("window {h}x{w} at ({top},{left}) outside {ih}x{iw}"),
            ));
        }
        let mut data = Vec::with_capacity(c * h * w);
        for ch in 0..c {
            for y in top..top + h {
                let row = (ch * ih + y) * iw;
                data.extend_from_slice(&self.data[row + left..row + left + w]);
            }
        }
        Ok(Self {
            shape: vec![c, h, w],
            data,
        })
    }
}
