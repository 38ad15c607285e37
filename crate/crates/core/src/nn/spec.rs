use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv,
    MaxPool,
    Upsample,
    Tanh,
    Sigmoid,
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LayerSpec {
    Conv {
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
    },
    MaxPool,
    Upsample {
        factor: usize,
    },
    Tanh,
    Sigmoid,
}

impl LayerSpec {
    pub fn conv(out_channels: usize, kernel_h: usize, kernel_w: usize) -> Self {
        LayerSpec::Conv {
            out_channels,
            kernel_h,
            kernel_w,
        }
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            LayerSpec::Conv { .. } => LayerKind::Conv,
            LayerSpec::MaxPool => LayerKind::MaxPool,
            LayerSpec::Upsample { .. } => LayerKind::Upsample,
            LayerSpec::Tanh => LayerKind::Tanh,
            LayerSpec::Sigmoid => LayerKind::Sigmoid,
        }
    }
}

/// Location of one convolution's parameters inside the flat weight vector:
/// kernels row-major `[out, in, kh, kw]` followed by `out` biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSlot {
    pub offset: usize,
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
}

impl ConvSlot {
    pub fn kernel_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_h * self.kernel_w
    }

    pub fn bias_offset(&self) -> usize {
        self.offset + self.kernel_len()
    }

    pub fn len(&self) -> usize {
        self.kernel_len() + self.out_channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_channels: usize,
    pub layers: Vec<LayerSpec>,
    pub num_classes: usize,
}

impl NetworkSpec {
    pub fn layer_kinds(&self) -> Vec<LayerKind> {
        self.layers.iter().map(LayerSpec::kind).collect()
    }

    /// Parameter slot per layer (`None` for parameter-free layers).
    pub fn layout(&self) -> Vec<Option<ConvSlot>> {
        let mut channels = self.input_channels;
        let mut offset = 0;
        self.layers
            .iter()
            .map(|layer| match *layer {
                LayerSpec::Conv {
                    out_channels,
                    kernel_h,
                    kernel_w,
                } => {
                    let slot = ConvSlot {
                        offset,
                        out_channels,
                        in_channels: channels,
                        kernel_h,
                        kernel_w,
                    };
                    offset += slot.len();
                    channels = out_channels;
                    Some(slot)
                }
                _ => None,
            })
            .collect()
    }

    /// Σ over convolutions of `out·in·kh·kw + out`.
    pub fn count_parameters(&self) -> usize {
        self.layout().iter().flatten().map(ConvSlot::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 {
            return Err(Error::Parameter("input_channels must be >= 1".into()));
        }
        if self.num_classes == 0 {
            return Err(Error::Parameter("num_classes must be >= 1".into()));
        }
        let mut channels = self.input_channels;
        for (i, layer) in self.layers.iter().enumerate() {
            match *layer {
                LayerSpec::Conv {
                    out_channels,
                    kernel_h,
                    kernel_w,
                } => {
                    if out_channels == 0 || kernel_h == 0 || kernel_w == 0 {
                        return Err(Error::Parameter(format!(
                            "layer {i} (Conv): out_channels and kernel dims must be >= 1"
                        )));
                    }
                    channels = out_channels;
                }
                LayerSpec::Upsample { factor: 0 } => {
                    return Err(Error::Parameter(format!("layer {i} (Upsample): factor must be >= 1")));
                }
                _ => {}
            }
        }
        if channels != self.num_classes {
            return Err(Error::Parameter(format!(
                "network emits {channels} channels but num_classes is {}",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Output `[C, H, W]` for an input of `height × width`.
    pub fn output_shape(&self, height: usize, width: usize) -> Result<(usize, usize, usize)> {
        let (mut c, mut h, mut w) = (self.input_channels, height, width);
        for (i, layer) in self.layers.iter().enumerate() {
            let ctx = || format!("layer {i} ({})", layer.kind());
            match *layer {
                LayerSpec::Conv {
                    out_channels,
                    kernel_h,
                    kernel_w,
                } => {
                    if kernel_h > h || kernel_w > w {
                        return Err(Error::dim(
                            ctx(),
                            format!("kernel {kernel_h}x{kernel_w} collapses {h}x{w} input below 1 pixel"),
                        ));
                    }
                    c = out_channels;
                    h = h - kernel_h + 1;
                    w = w - kernel_w + 1;
                }
                LayerSpec::MaxPool => {
                    if h % 2 != 0 || w % 2 != 0 {
                        return Err(Error::dim(ctx(), format!("pooling needs even dims, got {h}x{w}")));
                    }
                    h /= 2;
                    w /= 2;
                }
                LayerSpec::Upsample { factor } => {
                    h *= factor;
                    w *= factor;
                }
                LayerSpec::Tanh | LayerSpec::Sigmoid => {}
            }
        }
        Ok((c, h, w))
    }
}

/// Two-layer template matcher: two 7×7 filters over one channel, then three
/// 1×1 output neurons. 109 parameters; a 7×7 input maps to a single pixel.
pub fn build_toy_net() -> NetworkSpec {
    NetworkSpec {
        input_channels: 1,
        layers: vec![
            LayerSpec::conv(2, 7, 7),
            LayerSpec::Tanh,
            LayerSpec::conv(3, 1, 1),
            LayerSpec::Sigmoid,
        ],
        num_classes: 3,
    }
}

pub const TOY_PATCH: usize = 7;

pub const FACADE_INPUT_CHANNELS: usize = 3;
pub const FACADE_CLASSES: usize = 9;
pub const FACADE_CONV1_FILTERS: usize = 16;
pub const FACADE_CONV3_FILTERS: usize = 32;
/// Spatial extent of one output pixel's input window (5 + 5 + 3 − 2).
pub const FACADE_PATCH: usize = 11;
/// `k` at which the first fully connected layer has 192 kernels.
pub const LAYER_SCALING_K: usize = 16;

/// Fully-convolutional facade network with three convolutions and two fully
/// connected (1×1) layers:
///
/// ```text
/// Conv(3→16, 5×5)  Tanh
/// Conv(16→k, 5×5)  Tanh
/// Conv(k→32, 3×3)  Tanh
/// Conv(32→12k, 1×1) Tanh          first fully connected layer
/// [Conv(12k→12k, 1×1) Tanh] × l   repetitions of the first FC layer
/// Conv(12k→9, 1×1) Sigmoid
/// ```
///
/// Parameter count is [`facade_parameter_count`].
pub fn build_facade_net(k: usize, l: usize) -> Result<NetworkSpec> {
    if k < 1 {
        return Err(Error::Parameter(format!("filter count k must be >= 1, got {k}")));
    }
    let fc = 12 * k;
    let mut layers = vec![
        LayerSpec::conv(FACADE_CONV1_FILTERS, 5, 5),
        LayerSpec::Tanh,
        LayerSpec::conv(k, 5, 5),
        LayerSpec::Tanh,
        LayerSpec::conv(FACADE_CONV3_FILTERS, 3, 3),
        LayerSpec::Tanh,
        LayerSpec::conv(fc, 1, 1),
        LayerSpec::Tanh,
    ];
    for _ in 0..l {
        layers.push(LayerSpec::conv(fc, 1, 1));
        layers.push(LayerSpec::Tanh);
    }
    layers.push(LayerSpec::conv(FACADE_CLASSES, 1, 1));
    layers.push(LayerSpec::Sigmoid);
    Ok(NetworkSpec {
        input_channels: FACADE_INPUT_CHANNELS,
        layers,
        num_classes: FACADE_CLASSES,
    })
}

/// Closed form of `build_facade_net(k, l).count_parameters()`:
/// `1257 + 1193·k + l·(144·k² + 12·k)`.
pub fn facade_parameter_count(k: usize, l: usize) -> usize {
    1257 + 1193 * k + l * (144 * k * k + 12 * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use LayerKind::*;

    #[test]
    fn toy_net_has_109_parameters() {
        let spec = build_toy_net();
        assert_eq!(spec.count_parameters(), 109);
        assert_eq!(spec.layer_kinds(), vec![Conv, Tanh, Conv, Sigmoid]);
        assert_eq!(spec.output_shape(7, 7).unwrap(), (3, 1, 1));
        spec.validate().unwrap();
    }

    #[test]
    fn trivial_counts() {
        let empty = NetworkSpec {
            input_channels: 1,
            layers: vec![],
            num_classes: 1,
        };
        assert_eq!(empty.count_parameters(), 0);
        let single = NetworkSpec {
            input_channels: 1,
            layers: vec![LayerSpec::conv(1, 1, 1)],
            num_classes: 1,
        };
        assert_eq!(single.count_parameters(), 2);
    }

    #[test]
    fn facade_layer_kinds() {
        let spec = build_facade_net(2, 0).unwrap();
        assert_eq!(
            spec.layer_kinds(),
            vec![Conv, Tanh, Conv, Tanh, Conv, Tanh, Conv, Tanh, Conv, Sigmoid]
        );
        spec.validate().unwrap();
        assert_eq!(spec.output_shape(FACADE_PATCH, FACADE_PATCH).unwrap(), (9, 1, 1));
    }

    #[test]
    fn facade_count_matches_closed_form() {
        for k in 1..=25 {
            for l in 0..=5 {
                assert_eq!(
                    build_facade_net(k, l).unwrap().count_parameters(),
                    facade_parameter_count(k, l),
                    "k={k} l={l}"
                );
            }
        }
        let c = |k| facade_parameter_count(k, 0);
        assert_eq!(c(12) - c(7), c(7) - c(2));
    }

    #[test]
    fn layer_repetition_adds_192_kernel_layer() {
        for l in 0..5 {
            let a = build_facade_net(LAYER_SCALING_K, l).unwrap().count_parameters();
            let b = build_facade_net(LAYER_SCALING_K, l + 1).unwrap().count_parameters();
            assert_eq!(b - a, 192 * 192 + 192);
            assert_eq!(b - a, 37_056);
        }
    }

    #[test]
    fn facade_rejects_zero_k() {
        assert!(matches!(build_facade_net(0, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn collapse_names_offending_layer() {
        let err = build_facade_net(2, 0).unwrap().output_shape(8, 8).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("layer 2 (Conv)"), "{msg}");
    }

    #[test]
    fn validate_rejects_class_mismatch() {
        let mut spec = build_toy_net();
        spec.num_classes = 4;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn layout_is_contiguous() {
        let spec = build_facade_net(3, 1).unwrap();
        let mut next = 0;
        for slot in spec.layout().into_iter().flatten() {
            assert_eq!(slot.offset, next);
            next += slot.len();
        }
        assert_eq!(next, spec.count_parameters());
    }
}
