//! JSON weight files.
//!
//! ```json
//! { "format": "haznav-weights/1",
//!   "schedule": { ... },
//!   "layers": [ { "kind": "conv", "weights": [...], "biases": [...] }, ... ] }
//! ```
//!
//! Conv weights are `[filters][ky][kx][c_in]` and dense weights `[n_out][n_in]`,
//! both flattened row-major. Values are written as shortest round-trip
//! decimals, so a save/load cycle is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::net::{Net, NetError};
use super::scalar::Scalar;
use super::schedule::LayerSchedule;

pub const WEIGHTS_FORMAT: &str = "haznav-weights/1";

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("weight file is not valid: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported weight format {0:?}")]
    Format(String),
    #[error("weight file schedule does not match the expected schedule")]
    ScheduleMismatch,
    #[error("layer {layer} has {got} values, the schedule needs {want}")]
    LayerSize { layer: usize, got: usize, want: usize },
    #[error("layer {layer} has {got} entries, the schedule needs {want} layers")]
    LayerCount { layer: usize, got: usize, want: usize },
    #[error("non-finite value in layer {layer}")]
    NonFinite { layer: usize },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerWeights {
    kind: String,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightFile {
    format: String,
    schedule: LayerSchedule,
    layers: Vec<LayerWeights>,
}

pub fn weights_to_json<T: Scalar>(net: &Net<T>) -> Result<Vec<u8>, WeightsError> {
    let n_conv = net.schedule().conv.len();
    let layers = (0..net.layer_count())
        .map(|i| {
            let (w, b) = net.layer(i);
            LayerWeights {
                kind: if i < n_conv { "conv" } else { "dense" }.to_string(),
                weights: w.iter().map(|v| v.to_f64()).collect(),
                biases: b.iter().map(|v| v.to_f64()).collect(),
            }
        })
        .collect();
    let file = WeightFile {
        format: WEIGHTS_FORMAT.to_string(),
        schedule: net.schedule().clone(),
        layers,
    };
    let mut out = serde_json::to_vec(&file)?;
    out.push(b'\n');
    Ok(out)
}

/// Parses a weight file; when `expected` is given its schedule must match.
pub fn weights_from_json<T: Scalar>(bytes: &[u8], expected: Option<&LayerSchedule>) -> Result<Net<T>, WeightsError> {
    let file: WeightFile = serde_json::from_slice(bytes)?;
    if file.format != WEIGHTS_FORMAT {
        return Err(WeightsError::Format(file.format));
    }
    if expected.is_some_and(|s| *s != file.schedule) {
        return Err(WeightsError::ScheduleMismatch);
    }
    let sizes = file.schedule.layer_sizes().map_err(NetError::from)?;
    if file.layers.len() != sizes.len() {
        return Err(WeightsError::LayerCount {
            layer: file.layers.len().min(sizes.len()),
            got: file.layers.len(),
            want: sizes.len(),
        });
    }
    let mut params = Vec::with_capacity(sizes.iter().map(|(w, b)| w + b).sum());
    for (layer, (lw, &(nw, nb))) in file.layers.iter().zip(&sizes).enumerate() {
        if lw.weights.len() != nw || lw.biases.len() != nb {
            return Err(WeightsError::LayerSize {
                layer,
                got: lw.weights.len() + lw.biases.len(),
                want: nw + nb,
            });
        }
        for &v in lw.weights.iter().chain(&lw.biases) {
            let t = T::from_f64(v);
            if !v.is_finite() || !t.is_finite() {
                return Err(WeightsError::NonFinite { layer });
            }
            params.push(t);
        }
    }
    Ok(Net::from_params(file.schedule, params)?)
}

pub fn save_weights<T: Scalar>(net: &Net<T>, path: impl AsRef<Path>) -> Result<(), WeightsError> {
    std::fs::write(path, weights_to_json(net)?)?;
    Ok(())
}

pub fn load_weights<T: Scalar>(path: impl AsRef<Path>, expected: Option<&LayerSchedule>) -> Result<Net<T>, WeightsError> {
    weights_from_json(&std::fs::read(path)?, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::Mode;
    use crate::rng::Rng;

    fn sched() -> LayerSchedule {
        LayerSchedule::toy(8, 12, &[(3, 3, 2)], &[4, 1])
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = Rng::new(5);
        let net = Net::<f32>::init(sched(), &mut rng).unwrap();
        let bytes = weights_to_json(&net).unwrap();
        let back: Net<f32> = weights_from_json(&bytes, Some(&sched())).unwrap();
        assert_eq!(back, net);
        let x: Vec<f32> = (0..288).map(|_| rng.uniform(-1.0, 1.0) as f32).collect();
        let a = net.forward_batch(&[&x], Mode::Infer, &mut rng).unwrap();
        let b = back.forward_batch(&[&x], Mode::Infer, &mut rng).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn mismatched_schedule_is_rejected() {
        let net = Net::<f32>::init(sched(), &mut Rng::new(1)).unwrap();
        let bytes = weights_to_json(&net).unwrap();
        let other = LayerSchedule::toy(8, 12, &[(4, 3, 2)], &[4, 1]);
        assert!(matches!(
            weights_from_json::<f32>(&bytes, Some(&other)),
            Err(WeightsError::ScheduleMismatch)
        ));
    }

    #[test]
    fn injected_nan_is_rejected() {
        let net = Net::<f32>::init(sched(), &mut Rng::new(1)).unwrap();
        let text = String::from_utf8(weights_to_json(&net).unwrap()).unwrap();
        let at = text.find("\"biases\":[").unwrap() + "\"biases\":[".len();
        let end = at + text[at..].find([',', ']']).unwrap();
        for token in ["NaN", "1e999", "null"] {
            let edited = format!("{}{}{}", &text[..at], token, &text[end..]);
            assert!(weights_from_json::<f32>(edited.as_bytes(), None).is_err(), "{token} accepted");
        }
        let huge = format!("{}{}{}", &text[..at], "1e300", &text[end..]);
        assert!(matches!(
            weights_from_json::<f32>(huge.as_bytes(), None),
            Err(WeightsError::NonFinite { layer: 0 })
        ));
    }
}
