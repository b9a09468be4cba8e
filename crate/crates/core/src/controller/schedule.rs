use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    /// Zero padding on every side.
    #[serde(default)]
    pub padding: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseSpec {
    pub width: usize,
    pub activation: Activation,
}

/// Network layout: a conv stack on an `H x W x C` input, flattened in
/// row-major `(row, col, channel)` order into a dense stack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSchedule {
    /// Rows removed from the top of the camera frame before the network.
    pub crop_top: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub input_channels: usize,
    pub conv: Vec<ConvSpec>,
    pub dense: Vec<DenseSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub in_h: usize,
    pub in_w: usize,
    pub in_c: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub out_c: usize,
}

impl ConvShape {
    pub fn patch_len(&self, kernel: usize) -> usize {
        kernel * kernel * self.in_c
    }

    pub fn positions(&self) -> usize {
        self.out_h * self.out_w
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid layer schedule: {0}")]
pub struct ScheduleError(pub String);

fn conv(filters: usize, kernel: usize, stride: usize, padding: usize) -> ConvSpec {
    ConvSpec {
        filters,
        kernel,
        stride,
        padding,
        activation: Activation::Relu,
    }
}

fn dense_stack(widths: &[usize]) -> Vec<DenseSpec> {
    widths
        .iter()
        .enumerate()
        .map(|(i, &width)| DenseSpec {
            width,
            activation: if i + 1 == widths.len() {
                Activation::Linear
            } else {
                Activation::Relu
            },
        })
        .collect()
}

impl LayerSchedule {
    /// Five conv layers (three 5x5 stride 2, two 3x3 stride 1) with 24/36/48/64/64
    /// filters and dense widths 100/50/10/1, on the cropped bottom half of a
    /// `frame_height x frame_width` frame. The 3x3 layers pad by one pixel so
    /// that the stack fits the small desk-scale input.
    pub fn desk(frame_height: usize, frame_width: usize) -> Self {
        let crop_top = frame_height / 2;
        Self {
            crop_top,
            input_height: frame_height - crop_top,
            input_width: frame_width,
            input_channels: 3,
            conv: vec![
                conv(24, 5, 2, 0),
                conv(36, 5, 2, 0),
                conv(48, 5, 2, 0),
                conv(64, 3, 1, 1),
                conv(64, 3, 1, 1),
            ],
            dense: dense_stack(&[100, 50, 10, 1]),
        }
    }

    /// The same layer widths on a full 400x600 frame cropped to 200x600,
    /// without padding. This layout has 7,970,619 trainable parameters.
    pub fn full_frame() -> Self {
        Self {
            crop_top: 200,
            input_height: 200,
            input_width: 600,
            input_channels: 3,
            conv: vec![
                conv(24, 5, 2, 0),
                conv(36, 5, 2, 0),
                conv(48, 5, 2, 0),
                conv(64, 3, 1, 0),
                conv(64, 3, 1, 0),
            ],
            dense: dense_stack(&[100, 50, 10, 1]),
        }
    }

    /// Small schedule for numerical tests.
    pub fn toy(height: usize, width: usize, conv_layers: &[(usize, usize, usize)], dense: &[usize]) -> Self {
        Self {
            crop_top: 0,
            input_height: height,
            input_width: width,
            input_channels: 3,
            conv: conv_layers
                .iter()
                .map(|&(f, k, s)| conv(f, k, s, 0))
                .collect(),
            dense: dense_stack(dense),
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_height * self.input_width * self.input_channels
    }

    /// Shapes of every conv layer, or the first layer that does not fit.
    pub fn conv_shapes(&self) -> Result<Vec<ConvShape>, ScheduleError> {
        let (mut h, mut w, mut c) = (self.input_height, self.input_width, self.input_channels);
        let mut out = Vec::with_capacity(self.conv.len());
        for (i, l) in self.conv.iter().enumerate() {
            if l.filters == 0 || l.kernel == 0 || l.stride == 0 {
                return Err(ScheduleError(format!(
                    "conv layer {i} needs positive filters, kernel and stride"
                )));
            }
            let (ph, pw) = (h + 2 * l.padding, w + 2 * l.padding);
            if ph < l.kernel || pw < l.kernel {
                return Err(ScheduleError(format!(
                    "conv layer {i}: {}x{} kernel does not fit a padded {ph}x{pw} input",
                    l.kernel, l.kernel
                )));
            }
            let shape = ConvShape {
                in_h: h,
                in_w: w,
                in_c: c,
                out_h: (ph - l.kernel) / l.stride + 1,
                out_w: (pw - l.kernel) / l.stride + 1,
                out_c: l.filters,
            };
            (h, w, c) = (shape.out_h, shape.out_w, shape.out_c);
            out.push(shape);
        }
        Ok(out)
    }

    /// Length of the flattened conv output.
    pub fn flat_len(&self) -> Result<usize, ScheduleError> {
        Ok(match self.conv_shapes()?.last() {
            Some(s) => s.out_h * s.out_w * s.out_c,
            None => self.input_len(),
        })
    }

    /// `(n_in, n_out)` of every dense layer.
    pub fn dense_shapes(&self) -> Result<Vec<(usize, usize)>, ScheduleError> {
        let mut n = self.flat_len()?;
        let mut out = Vec::with_capacity(self.dense.len());
        for (i, d) in self.dense.iter().enumerate() {
            if d.width == 0 {
                return Err(ScheduleError(format!("dense layer {i} has zero width")));
            }
            out.push((n, d.width));
            n = d.width;
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.input_height == 0 || self.input_width == 0 || self.input_channels == 0 {
            return Err(ScheduleError("input dimensions must be positive".into()));
        }
        let dense = self.dense_shapes()?;
        match dense.last() {
            Some(&(_, 1)) => Ok(()),
            _ => Err(ScheduleError("the dense stack must end in width 1".into())),
        }
    }

    /// `(weights, biases)` lengths of every layer, conv layers first.
    pub fn layer_sizes(&self) -> Result<Vec<(usize, usize)>, ScheduleError> {
        let mut out: Vec<(usize, usize)> = self
            .conv_shapes()?
            .iter()
            .zip(&self.conv)
            .map(|(s, l)| (s.patch_len(l.kernel) * l.filters, l.filters))
            .collect();
        out.extend(self.dense_shapes()?.iter().map(|&(i, o)| (i * o, o)));
        Ok(out)
    }

    /// Trainable parameters: `sum(k*k*c_in*c_out + c_out)` over conv layers plus
    /// `sum(n_in*n_out + n_out)` over dense layers.
    pub fn param_count(&self) -> Result<usize, ScheduleError> {
        Ok(self.layer_sizes()?.iter().map(|(w, b)| w + b).sum())
    }
}

/// Free-function form of [`LayerSchedule::param_count`].
pub fn param_count(schedule: &LayerSchedule) -> Result<usize, ScheduleError> {
    schedule.param_count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_counts() {
        let dense = LayerSchedule {
            crop_top: 0,
            input_height: 1,
            input_width: 10,
            input_channels: 1,
            conv: vec![],
            dense: dense_stack(&[1]),
        };
        assert_eq!(param_count(&dense).unwrap(), 11);
        let conv = LayerSchedule {
            crop_top: 0,
            input_height: 5,
            input_width: 5,
            input_channels: 3,
            conv: vec![conv(8, 3, 1, 0)],
            dense: vec![],
        };
        assert_eq!(conv.layer_sizes().unwrap(), vec![(216, 8)]);
        assert_eq!(param_count(&conv).unwrap(), 224);
    }

    /// Independent per-layer tally of the desk schedule.
    #[test]
    fn desk_schedule_golden_count() {
        let s = LayerSchedule::desk(100, 150);
        let shapes = s.conv_shapes().unwrap();
        let dims: Vec<_> = shapes.iter().map(|c| (c.out_h, c.out_w, c.out_c)).collect();
        assert_eq!(
            dims,
            vec![(23, 73, 24), (10, 35, 36), (3, 16, 48), (3, 16, 64), (3, 16, 64)]
        );
        let tally = (5 * 5 * 3 * 24 + 24)
            + (5 * 5 * 24 * 36 + 36)
            + (5 * 5 * 36 * 48 + 48)
            + (3 * 3 * 48 * 64 + 64)
            + (3 * 3 * 64 * 64 + 64)
            + (3072 * 100 + 100)
            + (100 * 50 + 50)
            + (50 * 10 + 10)
            + (10 + 1);
        assert_eq!(tally, 444_219);
        assert_eq!(s.param_count().unwrap(), 444_219);
        s.validate().unwrap();
    }

    #[test]
    fn full_frame_schedule_count() {
        let s = LayerSchedule::full_frame();
        let last = *s.conv_shapes().unwrap().last().unwrap();
        assert_eq!((last.out_h, last.out_w, last.out_c), (18, 68, 64));
        assert_eq!(s.param_count().unwrap(), 7_970_619);
    }

    #[test]
    fn unpadded_desk_input_does_not_fit() {
        let mut s = LayerSchedule::desk(100, 150);
        s.conv[3].padding = 0;
        s.conv[4].padding = 0;
        assert!(s.conv_shapes().is_err());
    }

    #[test]
    fn schedule_must_end_in_one_output() {
        let s = LayerSchedule::toy(8, 12, &[(4, 3, 1)], &[5, 2]);
        assert!(s.validate().is_err());
    }
}
