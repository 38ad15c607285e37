use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::spec::{ConvSlot, LayerSpec, NetworkSpec};
use crate::ops::{self, PoolMask};
use crate::scalar::Scalar;
use crate::tensor::TensorOf;

static NEXT_GENERATION: AtomicU64 = AtomicU64::new(1);

fn fresh_generation() -> u64 {
    NEXT_GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// A compiled [`NetworkSpec`] with its flat weight vector.
///
/// Every weight mutation stamps the network with a new generation so a
/// [`ForwardCacheOf`] taken before the change is rejected by
/// [`NetworkOf::backward`].
#[derive(Debug)]
pub struct NetworkOf<T> {
    spec: NetworkSpec,
    layout: Vec<Option<ConvSlot>>,
    weights: Vec<T>,
    generation: u64,
}

impl<T: Clone> Clone for NetworkOf<T> {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            layout: self.layout.clone(),
            weights: self.weights.clone(),
            generation: fresh_generation(),
        }
    }
}

/// Activations and pooling masks retained by a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCacheOf<T> {
    generation: u64,
    /// Input of every layer, followed by the network output.
    activations: Vec<TensorOf<T>>,
    masks: Vec<Option<PoolMask>>,
}

impl<T> ForwardCacheOf<T> {
    pub fn output(&self) -> &TensorOf<T> {
        self.activations.last().expect("cache holds the network input")
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }
}

impl<T: Scalar> NetworkOf<T> {
    pub fn with_weights(spec: NetworkSpec, weights: Vec<T>) -> Result<Self> {
        spec.validate()?;
        let expected = spec.count_parameters();
        if weights.len() != expected {
            return Err(Error::dim(
                "network weights",
                format!("spec needs {expected} parameters, got {}", weights.len()),
            ));
        }
        Ok(Self {
            layout: spec.layout(),
            spec,
            weights,
            generation: fresh_generation(),
        })
    }

    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        let n = spec.count_parameters();
        Self::with_weights(spec, vec![T::zero(); n])
    }

    /// Kernels uniform in `[-1/√fan_in, 1/√fan_in]`, biases zero.
    pub fn init_uniform(spec: NetworkSpec, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        for slot in net.layout.clone().into_iter().flatten() {
            let r = 1.0 / (slot.fan_in() as f64).sqrt();
            for w in &mut net.weights[slot.offset..slot.bias_offset()] {
                *w = T::of(rng.gen_range(-r..=r));
            }
        }
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Mutable access to the weights; invalidates outstanding caches.
    pub fn weights_mut(&mut self) -> &mut [T] {
        self.generation = fresh_generation();
        &mut self.weights
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.len()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    fn conv_params(&self, slot: &ConvSlot) -> (TensorOf<T>, &[T]) {
        let kernels = TensorOf::new(
            vec![slot.out_channels, slot.in_channels, slot.kernel_h, slot.kernel_w],
            self.weights[slot.offset..slot.bias_offset()].to_vec(),
        )
        .expect("slot shape matches its length");
        let bias = &self.weights[slot.bias_offset()..slot.offset + slot.len()];
        (kernels, bias)
    }

    fn check_input(&self, input: &TensorOf<T>) -> Result<()> {
        let (c, h, w) = input.dims3()?;
        if c != self.spec.input_channels {
            return Err(Error::dim(
                "forward",
                format!("input has {c} channels, network expects {}", self.spec.input_channels),
            ));
        }
        self.spec.output_shape(h, w).map(|_| ())
    }

    /// Runs the network and keeps what [`Self::backward`] needs.
    pub fn forward(&self, input: &TensorOf<T>) -> Result<(TensorOf<T>, ForwardCacheOf<T>)> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.spec.layers.len() + 1);
        let mut masks = Vec::with_capacity(self.spec.layers.len());
        activations.push(input.clone());
        for (layer, slot) in self.spec.layers.iter().zip(&self.layout) {
            let x = activations.last().expect("non-empty");
            let (y, mask) = self.apply(layer, slot.as_ref(), x)?;
            masks.push(mask);
            activations.push(y);
        }
        let scores = activations.last().expect("non-empty").clone();
        Ok((
            scores,
            ForwardCacheOf {
                generation: self.generation,
                activations,
                masks,
            },
        ))
    }

    /// Forward pass without retaining intermediate activations.
    pub fn infer(&self, input: &TensorOf<T>) -> Result<TensorOf<T>> {
        self.check_input(input)?;
        let mut x = input.clone();
        for (layer, slot) in self.spec.layers.iter().zip(&self.layout) {
            x = self.apply(layer, slot.as_ref(), &x)?.0;
        }
        Ok(x)
    }

    fn apply(
        &self,
        layer: &LayerSpec,
        slot: Option<&ConvSlot>,
        x: &TensorOf<T>,
    ) -> Result<(TensorOf<T>, Option<PoolMask>)> {
        Ok(match layer {
            LayerSpec::Conv { .. } => {
                let (k, b) = self.conv_params(slot.expect("conv layer has a slot"));
                (ops::conv2d_forward(x, &k, b)?, None)
            }
            LayerSpec::MaxPool => {
                let (y, m) = ops::maxpool2x2(x)?;
                (y, Some(m))
            }
            LayerSpec::Upsample { factor } => (ops::upsample_nn(x, *factor)?, None),
            LayerSpec::Tanh => (ops::tanh(x), None),
            LayerSpec::Sigmoid => (ops::sigmoid(x), None),
        })
    }

    /// Gradient of [`quadratic_loss`] at the cached forward pass, laid out
    /// like the weight vector.
    pub fn backward(&self, cache: &ForwardCacheOf<T>, target: &TensorOf<T>) -> Result<Vec<T>> {
        self.backward_masked(cache, target, None)
    }

    /// As [`Self::backward`] for [`quadratic_loss_masked`].
    pub fn backward_masked(
        &self,
        cache: &ForwardCacheOf<T>,
        target: &TensorOf<T>,
        mask: Option<&[bool]>,
    ) -> Result<Vec<T>> {
        if cache.generation != self.generation {
            return Err(Error::State(format!(
                "forward cache generation {} does not match network generation {}",
                cache.generation, self.generation
            )));
        }
        let scores = cache.output();
        let (_, pixels) = loss_terms(scores, target, mask)?;
        let mut grad = vec![T::zero(); self.weights.len()];
        if pixels == 0 {
            return Ok(grad);
        }
        let (k, h, w) = scores.dims3()?;
        let norm = T::one() / T::of(pixels as f64);
        let mut delta = TensorOf::from_fn(&[k, h, w], |i| {
            let p = i % (h * w);
            if mask.is_none_or(|m| m[p]) {
                (scores.data()[i] - target.data()[i]) * norm
            } else {
                T::zero()
            }
        });

        for (i, layer) in self.spec.layers.iter().enumerate().rev() {
            let input = &cache.activations[i];
            let output = &cache.activations[i + 1];
            delta = match layer {
                LayerSpec::Conv { .. } => {
                    let slot = self.layout[i].as_ref().expect("conv layer has a slot");
                    let (kernels, _) = self.conv_params(slot);
                    let g = ops::conv2d_backward(input, &kernels, &delta)?;
                    grad[slot.offset..slot.bias_offset()].copy_from_slice(g.kernels.data());
                    grad[slot.bias_offset()..slot.offset + slot.len()].copy_from_slice(&g.bias);
                    g.input
                }
                LayerSpec::MaxPool => {
                    let m = cache.masks[i].as_ref().expect("pool layer cached its mask");
                    ops::maxpool2x2_backward(m, &delta)?
                }
                LayerSpec::Upsample { factor } => ops::upsample_nn_backward(&delta, *factor)?,
                LayerSpec::Tanh => ops::tanh_backward(output, &delta)?,
                LayerSpec::Sigmoid => ops::sigmoid_backward(output, &delta)?,
            };
        }
        Ok(grad)
    }
}

fn loss_terms<T: Scalar>(scores: &TensorOf<T>, target: &TensorOf<T>, mask: Option<&[bool]>) -> Result<(T, usize)> {
    if scores.shape() != target.shape() {
        return Err(Error::dim(
            "quadratic_loss",
            format!("scores {:?} vs target {:?}", scores.shape(), target.shape()),
        ));
    }
    let (k, h, w) = scores.dims3()?;
    let plane = h * w;
    if let Some(m) = mask {
        if m.len() != plane {
            return Err(Error::dim(
                "quadratic_loss",
                format!("mask has {} entries for {h}x{w} pixels", m.len()),
            ));
        }
    }
    let valid = |p: usize| mask.is_none_or(|m| m[p]);
    let half = T::of(0.5);
    let mut sum = T::zero();
    for c in 0..k {
        for p in 0..plane {
            if valid(p) {
                let d = scores.data()[c * plane + p] - target.data()[c * plane + p];
                sum += half * d * d;
            }
        }
    }
    let pixels = (0..plane).filter(|&p| valid(p)).count();
    Ok((sum, pixels))
}

/// `(1/(H·W)) · Σ_pixels ½ Σ_c (score − target)²`.
pub fn quadratic_loss<T: Scalar>(scores: &TensorOf<T>, target: &TensorOf<T>) -> Result<T> {
    let (sum, pixels) = loss_terms(scores, target, None)?;
    Ok(sum / T::of(pixels as f64))
}

/// Quadratic loss averaged over the pixels where `mask` is true. Returns the
/// per-pixel loss and the number of pixels it averages; the loss is zero when
/// no pixel is selected.
pub fn quadratic_loss_masked<T: Scalar>(
    scores: &TensorOf<T>,
    target: &TensorOf<T>,
    mask: Option<&[bool]>,
) -> Result<(T, usize)> {
    let (sum, pixels) = loss_terms(scores, target, mask)?;
    if pixels == 0 {
        return Ok((T::zero(), 0));
    }
    Ok((sum / T::of(pixels as f64), pixels))
}

/// One-hot `[K, H, W]` target from a row-major label map.
pub fn one_hot<T: Scalar>(labels: &[u8], num_classes: usize, height: usize, width: usize) -> Result<TensorOf<T>> {
    if labels.len() != height * width {
        return Err(Error::dim(
            "one_hot",
            format!("{} labels for {height}x{width} pixels", labels.len()),
        ));
    }
    let mut t = TensorOf::zeros(&[num_classes, height, width]);
    let plane = height * width;
    for (p, &l) in labels.iter().enumerate() {
        let l = l as usize;
        if l >= num_classes {
            return Err(Error::Data(format!("label {l} out of range for {num_classes} classes")));
        }
        t.data_mut()[l * plane + p] = T::one();
    }
    Ok(t)
}

/// Per-pixel index of the highest score; ties go to the lower class index.
pub fn argmax_labels<T: Scalar>(scores: &TensorOf<T>) -> Result<Vec<u8>> {
    let (k, h, w) = scores.dims3()?;
    let plane = h * w;
    Ok((0..plane)
        .map(|p| {
            let mut best = 0;
            for c in 1..k {
                if scores.data()[c * plane + p] > scores.data()[best * plane + p] {
                    best = c;
                }
            }
            best as u8
        })
        .collect())
}
