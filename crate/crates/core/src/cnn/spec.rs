use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero padding of a convolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// No padding; the sequence shrinks by `kernel_size - 1`.
    #[default]
    Valid,
    /// `(k - 1) / 2` zeros on the left and the rest on the right, so the
    /// output keeps the input length and stays aligned with it.
    Same,
}

/// One layer of a 1D CNN. Convolutions are stride-1 and followed by `tanh`;
/// pooling is non-overlapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Conv1d {
        out_channels: usize,
        kernel_size: usize,
        #[serde(default)]
        padding: Padding,
    },
    MaxPool { window: usize },
    GlobalAvgPool,
    DenseSoftmax { classes: usize },
}

impl LayerSpec {
    /// Unpadded convolution.
    pub fn conv(out_channels: usize, kernel_size: usize) -> Self {
        LayerSpec::Conv1d {
            out_channels,
            kernel_size,
            padding: Padding::Valid,
        }
    }

    pub fn conv_same(out_channels: usize, kernel_size: usize) -> Self {
        LayerSpec::Conv1d {
            out_channels,
            kernel_size,
            padding: Padding::Same,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSpec {
    pub input_len: usize,
    pub layers: Vec<LayerSpec>,
}

/// Activation shape: `channels x len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub channels: usize,
    pub len: usize,
}

impl Shape {
    pub fn size(&self) -> usize {
        self.channels * self.len
    }
}

/// Resolved shapes and parameter offsets for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerPlan {
    pub layer: LayerSpec,
    pub input: Shape,
    pub output: Shape,
    /// Start of this layer's weights in the flat parameter vector; biases
    /// follow immediately after the weights.
    pub offset: usize,
    pub weights: usize,
    pub biases: usize,
    pub fan_in: usize,
}

impl LayerPlan {
    pub fn param_count(&self) -> usize {
        self.weights + self.biases
    }
}

impl ArchitectureSpec {
    /// Checks layer ordering and shapes and lays out the parameters.
    pub fn plan(&self) -> Result<Vec<LayerPlan>> {
        let err = |m: String| Err(Error::Spec(m));
        if self.input_len == 0 {
            return err("input length must be positive".into());
        }
        let gap_positions: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::GlobalAvgPool))
            .map(|(i, _)| i)
            .collect();
        if gap_positions.len() != 1 {
            return err(format!(
                "expected exactly one global_avg_pool, found {}",
                gap_positions.len()
            ));
        }
        let gap = gap_positions[0];
        if gap + 2 != self.layers.len()
            || !matches!(self.layers[gap + 1], LayerSpec::DenseSoftmax { .. })
        {
            return err("global_avg_pool must be followed by exactly one dense_softmax".into());
        }
        if !self.layers[..gap]
            .iter()
            .any(|l| matches!(l, LayerSpec::Conv1d { .. }))
        {
            return err("at least one conv1d layer is required".into());
        }

        let mut shape = Shape {
            channels: 1,
            len: self.input_len,
        };
        let mut offset = 0;
        let mut plans = Vec::with_capacity(self.layers.len());
        for (i, &layer) in self.layers.iter().enumerate() {
            let input = shape;
            let (output, weights, biases, fan_in) = match layer {
                LayerSpec::Conv1d {
                    out_channels,
                    kernel_size,
                    padding,
                } => {
                    if out_channels == 0 || kernel_size == 0 {
                        return err(format!("layer {i}: conv1d needs positive channels and kernel"));
                    }
                    if kernel_size > input.len {
                        return err(format!(
                            "layer {i}: kernel {kernel_size} longer than sequence {}",
                            input.len
                        ));
                    }
                    let len = match padding {
                        Padding::Valid => input.len - kernel_size + 1,
                        Padding::Same => input.len,
                    };
                    let out = Shape {
                        channels: out_channels,
                        len,
                    };
                    let fan_in = input.channels * kernel_size;
                    (out, out_channels * fan_in, out_channels, fan_in)
                }
                LayerSpec::MaxPool { window } => {
                    if window == 0 || window > input.len {
                        return err(format!(
                            "layer {i}: pool window {window} invalid for sequence {}",
                            input.len
                        ));
                    }
                    let out = Shape {
                        channels: input.channels,
                        len: input.len / window,
                    };
                    (out, 0, 0, 0)
                }
                LayerSpec::GlobalAvgPool => (
                    Shape {
                        channels: input.channels,
                        len: 1,
                    },
                    0,
                    0,
                    0,
                ),
                LayerSpec::DenseSoftmax { classes } => {
                    if i != gap + 1 {
                        return err(format!("layer {i}: dense_softmax must follow global_avg_pool"));
                    }
                    if classes == 0 {
                        return err("dense_softmax needs at least one class".into());
                    }
                    let out = Shape {
                        channels: classes,
                        len: 1,
                    };
                    (out, classes * input.channels, classes, input.channels)
                }
            };
            plans.push(LayerPlan {
                layer,
                input,
                output,
                offset,
                weights,
                biases,
                fan_in,
            });
            offset += weights + biases;
            shape = output;
        }
        Ok(plans)
    }

    pub fn class_count(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::DenseSoftmax { classes }) => *classes,
            _ => 0,
        }
    }

    pub fn conv_layers(&self) -> impl Iterator<Item = usize> + '_ {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Conv1d { .. }))
            .map(|(i, _)| i)
    }

    /// Index of the last convolution before global pooling.
    pub fn last_conv_layer(&self) -> Option<usize> {
        self.conv_layers().last()
    }
}

/// Named architecture families with configurable widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchitectureKind {
    /// Ten tanh convolutions with one mid-network max-pool (13 layers).
    A,
    /// Six convolutions, max-pool, three convolutions (12 layers with the head).
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub kind: ArchitectureKind,
    /// Output channels of every convolution, in order; `None` uses the
    /// family default.
    #[serde(default)]
    pub widths: Option<Vec<usize>>,
    #[serde(default = "default_kernel")]
    pub kernel_size: usize,
    #[serde(default = "default_pool")]
    pub pool_window: usize,
    #[serde(default = "default_padding")]
    pub padding: Padding,
}

fn default_padding() -> Padding {
    Padding::Same
}

fn default_kernel() -> usize {
    5
}

fn default_pool() -> usize {
    2
}

impl ArchitectureConfig {
    pub fn a() -> Self {
        ArchitectureConfig {
            kind: ArchitectureKind::A,
            widths: None,
            kernel_size: default_kernel(),
            pool_window: default_pool(),
            padding: default_padding(),
        }
    }

    pub fn b() -> Self {
        ArchitectureConfig {
            kind: ArchitectureKind::B,
            ..Self::a()
        }
    }

    pub fn with_widths(mut self, widths: &[usize]) -> Self {
        self.widths = Some(widths.to_vec());
        self
    }

    pub fn default_widths(kind: ArchitectureKind) -> Vec<usize> {
        match kind {
            ArchitectureKind::A => vec![16, 16, 32, 32, 64, 64, 128, 128, 256, 256],
            ArchitectureKind::B => vec![16, 16, 32, 32, 64, 64, 128, 128, 128],
        }
    }

    /// Number of convolutions before the max-pool and in total.
    fn layout(kind: ArchitectureKind) -> (usize, usize) {
        match kind {
            ArchitectureKind::A => (5, 10),
            ArchitectureKind::B => (6, 9),
        }
    }

    pub fn build(&self, input_len: usize, classes: usize) -> Result<ArchitectureSpec> {
        let widths = self
            .widths
            .clone()
            .unwrap_or_else(|| Self::default_widths(self.kind));
        let (before_pool, total) = Self::layout(self.kind);
        if widths.len() != total {
            return Err(Error::Spec(format!(
                "architecture {:?} needs {total} widths, got {}",
                self.kind,
                widths.len()
            )));
        }
        let mut layers = Vec::with_capacity(total + 3);
        for (i, &w) in widths.iter().enumerate() {
            if i == before_pool {
                layers.push(LayerSpec::MaxPool {
                    window: self.pool_window,
                });
            }
            layers.push(LayerSpec::Conv1d {
                out_channels: w,
                kernel_size: self.kernel_size,
                padding: self.padding,
            });
        }
        layers.push(LayerSpec::GlobalAvgPool);
        layers.push(LayerSpec::DenseSoftmax { classes });
        let spec = ArchitectureSpec { input_len, layers };
        spec.plan()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architecture_a_has_thirteen_layers() {
        let spec = ArchitectureConfig::a().build(200, 4).unwrap();
        assert_eq!(spec.layers.len(), 13);
        assert_eq!(spec.conv_layers().count(), 10);
        assert_eq!(spec.class_count(), 4);
        assert_eq!(spec.last_conv_layer(), Some(10));
    }

    #[test]
    fn architecture_b_layout() {
        let spec = ArchitectureConfig::b().build(200, 4).unwrap();
        assert_eq!(spec.conv_layers().count(), 9);
        assert_eq!(spec.layers[6], LayerSpec::MaxPool { window: 2 });
        assert_eq!(spec.layers.len(), 12);
    }

    #[test]
    fn dense_before_pool_is_rejected() {
        let spec = ArchitectureSpec {
            input_len: 16,
            layers: vec![
                LayerSpec::conv(2, 3),
                LayerSpec::DenseSoftmax { classes: 2 },
                LayerSpec::GlobalAvgPool,
            ],
        };
        assert_eq!(spec.plan().unwrap_err().category(), "SpecError");
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let spec = ArchitectureSpec {
            input_len: 4,
            layers: vec![
                LayerSpec::conv(2, 5),
                LayerSpec::GlobalAvgPool,
                LayerSpec::DenseSoftmax { classes: 2 },
            ],
        };
        assert!(matches!(spec.plan(), Err(Error::Spec(_))));
        // Shrinking sequence: 10 -> 6 -> 3 (pool) -> kernel 5 does not fit.
        let spec = ArchitectureSpec {
            input_len: 10,
            layers: vec![
                LayerSpec::conv(2, 5),
                LayerSpec::MaxPool { window: 2 },
                LayerSpec::conv(2, 5),
                LayerSpec::GlobalAvgPool,
                LayerSpec::DenseSoftmax { classes: 2 },
            ],
        };
        assert!(spec.plan().is_err());
    }

    #[test]
    fn parameter_offsets_are_contiguous() {
        let spec = ArchitectureConfig::a()
            .with_widths(&[2, 2, 3, 3, 4, 4, 5, 5, 6, 6])
            .build(64, 3)
            .unwrap();
        let plans = spec.plan().unwrap();
        let mut next = 0;
        for p in &plans {
            assert_eq!(p.offset, next);
            next += p.param_count();
        }
        assert_eq!(plans[0].weights, 2 * 5);
        assert_eq!(plans.last().unwrap().weights, 3 * 6);
    }
}
