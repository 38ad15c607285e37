//! Convolution, pooling, up-sampling and activation kernels with their
//! backward passes. All functions are pure.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::TensorOf;

/// Gradients of a scalar loss with respect to the three inputs of
/// [`conv2d_forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads<T> {
    pub input: TensorOf<T>,
    pub kernels: TensorOf<T>,
    pub bias: Vec<T>,
}

fn kernel_dims<T: Scalar>(kernels: &TensorOf<T>) -> Result<(usize, usize, usize, usize)> {
    match *kernels.shape() {
        [o, c, kh, kw] => Ok((o, c, kh, kw)),
        ref s => Err(Error::dim(
            "conv2d",
            format!("kernels must be [C_out,C_in,Kh,Kw], got {s:?}"),
        )),
    }
}

fn conv_output_dims<T: Scalar>(
    input: &TensorOf<T>,
    kernels: &TensorOf<T>,
) -> Result<(usize, usize, usize, usize, usize)> {
    let (c, h, w) = input.dims3()?;
    let (o, kc, kh, kw) = kernel_dims(kernels)?;
    if kc != c {
        return Err(Error::dim(
            "conv2d",
            format!("channel axis: input has {c}, kernels expect {kc}"),
        ));
    }
    if kh > h || kw > w {
        return Err(Error::dim(
            "conv2d",
            format!("spatial axes: kernel {kh}x{kw} larger than input {h}x{w}"),
        ));
    }
    Ok((o, kh, kw, h - kh + 1, w - kw + 1))
}

/// Valid cross-correlation plus per-output-channel bias:
/// `out[o,y,x] = bias[o] + Σ_{c,i,j} input[c,y+i,x+j] · kernels[o,c,i,j]`.
pub fn conv2d_forward<T: Scalar>(
    input: &TensorOf<T>,
    kernels: &TensorOf<T>,
    bias: &[T],
) -> Result<TensorOf<T>> {
    let (c_in, h, w) = input.dims3()?;
    let (c_out, kh, kw, oh, ow) = conv_output_dims(input, kernels)?;
    if bias.len() != c_out {
        return Err(Error::dim(
            "conv2d",
            format!("bias axis: expected {c_out}, got {}", bias.len()),
        ));
    }
    let inp = input.data();
    let ker = kernels.data();
    let mut out = vec![T::zero(); c_out * oh * ow];
    for (o, plane) in out.chunks_exact_mut(oh * ow).enumerate() {
        plane.iter_mut().for_each(|v| *v = bias[o]);
        for c in 0..c_in {
            for i in 0..kh {
                for j in 0..kw {
                    let k = ker[((o * c_in + c) * kh + i) * kw + j];
                    if k == T::zero() {
                        continue;
                    }
                    for y in 0..oh {
                        let src = &inp[(c * h + y + i) * w + j..][..ow];
                        let dst = &mut plane[y * ow..(y + 1) * ow];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d += k * s;
                        }
                    }
                }
            }
        }
    }
    TensorOf::new(vec![c_out, oh, ow], out)
}

/// Backward pass of [`conv2d_forward`] given the upstream gradient.
pub fn conv2d_backward<T: Scalar>(
    input: &TensorOf<T>,
    kernels: &TensorOf<T>,
    grad_out: &TensorOf<T>,
) -> Result<ConvGrads<T>> {
    let (c_in, h, w) = input.dims3()?;
    let (c_out, kh, kw, oh, ow) = conv_output_dims(input, kernels)?;
    if grad_out.shape() != [c_out, oh, ow] {
        return Err(Error::dim(
            "conv2d_backward",
            format!(
                "grad_out shape {:?} does not match output [{c_out},{oh},{ow}]",
                grad_out.shape()
            ),
        ));
    }
    let inp = input.data();
    let ker = kernels.data();
    let g = grad_out.data();
    let mut g_in = vec![T::zero(); inp.len()];
    let mut g_ker = vec![T::zero(); ker.len()];
    let mut g_bias = vec![T::zero(); c_out];

    for o in 0..c_out {
        let plane = &g[o * oh * ow..(o + 1) * oh * ow];
        g_bias[o] = plane.iter().copied().sum();
        for c in 0..c_in {
            for i in 0..kh {
                for j in 0..kw {
                    let kidx = ((o * c_in + c) * kh + i) * kw + j;
                    let k = ker[kidx];
                    let mut acc = T::zero();
                    for y in 0..oh {
                        let row = (c * h + y + i) * w + j;
                        let src = &inp[row..row + ow];
                        let gr = &plane[y * ow..(y + 1) * ow];
                        let gi = &mut g_in[row..row + ow];
                        for x in 0..ow {
                            acc += gr[x] * src[x];
                            gi[x] += gr[x] * k;
                        }
                    }
                    g_ker[kidx] = acc;
                }
            }
        }
    }
    Ok(ConvGrads {
        input: TensorOf::new(input.shape().to_vec(), g_in)?,
        kernels: TensorOf::new(kernels.shape().to_vec(), g_ker)?,
        bias: g_bias,
    })
}

/// Flat input index of the maximum of every 2×2 pooling window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolMask {
    input_shape: Vec<usize>,
    argmax: Vec<usize>,
}

impl PoolMask {
    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

/// 2×2 max pooling with stride 2. Ties go to the first element in row-major
/// order within the window.
pub fn maxpool2x2<T: Scalar>(input: &TensorOf<T>) -> Result<(TensorOf<T>, PoolMask)> {
    let (c, h, w) = input.dims3()?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::dim(
            "maxpool2x2",
            format!("spatial axes must be even, got {h}x{w}"),
        ));
    }
    let (oh, ow) = (h / 2, w / 2);
    let inp = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let base = (ch * h + 2 * y) * w + 2 * x;
                let mut best = base;
                for idx in [base + 1, base + w, base + w + 1] {
                    if inp[idx] > inp[best] {
                        best = idx;
                    }
                }
                out.push(inp[best]);
                argmax.push(best);
            }
        }
    }
    Ok((
        TensorOf::new(vec![c, oh, ow], out)?,
        PoolMask {
            input_shape: input.shape().to_vec(),
            argmax,
        },
    ))
}

pub fn maxpool2x2_backward<T: Scalar>(mask: &PoolMask, grad_out: &TensorOf<T>) -> Result<TensorOf<T>> {
    if grad_out.len() != mask.argmax.len() {
        return Err(Error::dim(
            "maxpool2x2_backward",
            format!(
                "grad_out has {} values, mask routes {}",
                grad_out.len(),
                mask.argmax.len()
            ),
        ));
    }
    let mut g = TensorOf::zeros(&mask.input_shape);
    let gd = g.data_mut();
    for (&idx, &v) in mask.argmax.iter().zip(grad_out.data()) {
        gd[idx] += v;
    }
    Ok(g)
}

/// Nearest-neighbour up-sampling: `out[c,y,x] = in[c, y/f, x/f]`.
pub fn upsample_nn<T: Scalar>(input: &TensorOf<T>, factor: usize) -> Result<TensorOf<T>> {
    if factor == 0 {
        return Err(Error::Parameter("upsample factor must be >= 1".into()));
    }
    let (c, h, w) = input.dims3()?;
    let (oh, ow) = (h * factor, w * factor);
    let inp = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            let row = &inp[(ch * h + y / factor) * w..][..w];
            out.extend((0..ow).map(|x| row[x / factor]));
        }
    }
    TensorOf::new(vec![c, oh, ow], out)
}

/// Sums each `factor × factor` block of `grad_out`.
pub fn upsample_nn_backward<T: Scalar>(grad_out: &TensorOf<T>, factor: usize) -> Result<TensorOf<T>> {
    if factor == 0 {
        return Err(Error::Parameter("upsample factor must be >= 1".into()));
    }
    let (c, oh, ow) = grad_out.dims3()?;
    if oh % factor != 0 || ow % factor != 0 {
        return Err(Error::dim(
            "upsample_nn_backward",
            format!("grad_out {oh}x{ow} not divisible by factor {factor}"),
        ));
    }
    let (h, w) = (oh / factor, ow / factor);
    let g = grad_out.data();
    let mut out = vec![T::zero(); c * h * w];
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                out[(ch * h + y / factor) * w + x / factor] += g[(ch * oh + y) * ow + x];
            }
        }
    }
    TensorOf::new(vec![c, h, w], out)
}

pub fn tanh<T: Scalar>(input: &TensorOf<T>) -> TensorOf<T> {
    input.map(|v| v.tanh())
}

pub fn sigmoid<T: Scalar>(input: &TensorOf<T>) -> TensorOf<T> {
    input.map(sigmoid_scalar)
}

#[inline]
pub fn sigmoid_scalar<T: Scalar>(v: T) -> T {
    // Split on sign so exp never overflows.
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// Backward of tanh expressed through its output `y`: `g · (1 − y²)`.
pub fn tanh_backward<T: Scalar>(output: &TensorOf<T>, grad_out: &TensorOf<T>) -> Result<TensorOf<T>> {
    zip_map(output, grad_out, "tanh_backward", |y, g| g * (T::one() - y * y))
}

/// Backward of sigmoid expressed through its output `y`: `g · y · (1 − y)`.
pub fn sigmoid_backward<T: Scalar>(output: &TensorOf<T>, grad_out: &TensorOf<T>) -> Result<TensorOf<T>> {
    zip_map(output, grad_out, "sigmoid_backward", |y, g| g * y * (T::one() - y))
}

fn zip_map<T: Scalar>(
    a: &TensorOf<T>,
    b: &TensorOf<T>,
    context: &str,
    f: impl Fn(T, T) -> T,
) -> Result<TensorOf<T>> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            context,
            format!("shapes {:?} and {:?} differ", a.shape(), b.shape()),
        ));
    }
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    TensorOf::new(a.shape().to_vec(), data)
}
