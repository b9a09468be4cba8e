use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::net::{Mode, Net, NetError};
use super::scalar::Scalar;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub dropout: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            dropout: 0.5,
            l2: 1e-6,
            batch_size: 32,
            max_epochs: 30,
            patience: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        let mut bad = Vec::new();
        if !(self.learning_rate >= 0.0) {
            bad.push("train.learning_rate must be >= 0".to_string());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            bad.push("train.beta1 and train.beta2 must lie in [0, 1)".to_string());
        }
        if !(self.epsilon > 0.0) {
            bad.push("train.epsilon must be > 0".to_string());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            bad.push("train.dropout must lie in [0, 1)".to_string());
        }
        if !(self.l2 >= 0.0) {
            bad.push("train.l2 must be >= 0".to_string());
        }
        if self.batch_size == 0 {
            bad.push("train.batch_size must be > 0".to_string());
        }
        if self.max_epochs == 0 {
            bad.push("train.max_epochs must be > 0".to_string());
        }
        if self.patience == 0 {
            bad.push("train.patience must be > 0".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad.join("; "))
        }
    }
}

/// Adaptive-moment optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step<T: Scalar>(&mut self, params: &mut [T], grad: &[T], cfg: &TrainConfig) {
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for i in 0..params.len() {
            let g = grad[i].to_f64();
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            let p = params[i].to_f64() - cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            params[i] = T::from_f64(p);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub best: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl History {
    pub fn best_val_loss(&self) -> Option<f64> {
        self.best_epoch.map(|e| self.epochs[e - 1].val_loss)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, crate::table::TableError> {
        crate::table::csv_bytes(
            &["epoch", "train_loss", "val_loss", "best_flag"],
            self.epochs.iter().map(|e| {
                [
                    e.epoch.to_string(),
                    e.train_loss.to_string(),
                    e.val_loss.to_string(),
                    u8::from(e.best).to_string(),
                ]
            }),
        )
    }
}

/// Best-validation tracking with patience.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    since_best: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochVerdict {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            since_best: 0,
        }
    }

    /// Records the validation loss of 1-based `epoch`.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> EpochVerdict {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = Some(epoch);
            self.since_best = 0;
            EpochVerdict::Improved
        } else {
            self.since_best += 1;
            if self.since_best >= self.patience {
                EpochVerdict::Stop
            } else {
                EpochVerdict::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize, history: History },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Mean data loss of `net` on `rows` in inference mode.
pub fn evaluate_mse<T: Scalar>(net: &Net<T>, rows: &[(&[f32], f64)]) -> Result<f64, NetError> {
    let inputs: Vec<&[f32]> = rows.iter().map(|r| r.0).collect();
    let preds = net.predict(&inputs)?;
    Ok(preds
        .iter()
        .zip(rows)
        .map(|(p, r)| (p - r.1).powi(2))
        .sum::<f64>()
        / rows.len() as f64)
}

/// Mini-batch training with early stopping. On return `net` holds the weights
/// of the best validation epoch.
///
/// Each epoch shuffles the training rows with a stream forked from `rng`, and
/// dropout masks come from a second forked stream, so a run is a pure
/// function of its inputs.
pub fn train<T: Scalar>(
    net: &mut Net<T>,
    train_rows: &[(&[f32], f64)],
    val_rows: &[(&[f32], f64)],
    cfg: &TrainConfig,
    rng: &Rng,
) -> Result<History, TrainError> {
    cfg.validate().map_err(TrainError::InvalidConfig)?;
    if train_rows.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    if val_rows.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }
    let mut adam = Adam::new(net.param_count());
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut history = History::default();
    let mut best = net.clone();
    let mode = Mode::Train {
        dropout: cfg.dropout,
    };

    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..train_rows.len()).collect();
        rng.fork(&format!("shuffle/{epoch}")).shuffle(&mut order);
        let mut drop_rng = rng.fork(&format!("dropout/{epoch}"));
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&[f32], f64)> = chunk.iter().map(|&i| train_rows[i]).collect();
            let (grad, loss) = match net.backward(&batch, cfg.l2, mode, &mut drop_rng) {
                Ok(v) => v,
                Err(NetError::NonFiniteActivation { .. } | NetError::NonFiniteGradient { .. }) => {
                    return Err(TrainError::Diverged { epoch, history });
                }
                Err(e) => return Err(e.into()),
            };
            total += loss.total() * batch.len() as f64;
            adam.step(net.params_mut(), &grad, cfg);
        }
        let train_loss = total / train_rows.len() as f64;
        let val_loss = match evaluate_mse(net, val_rows) {
            Ok(v) if v.is_finite() => v,
            Ok(_) | Err(NetError::NonFiniteActivation { .. }) => {
                history.epochs.push(EpochRecord {
                    epoch,
                    train_loss,
                    val_loss: f64::NAN,
                    best: false,
                });
                return Err(TrainError::Diverged { epoch, history });
            }
            Err(e) => return Err(e.into()),
        };
        let verdict = stopper.observe(epoch, val_loss);
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            best: verdict == EpochVerdict::Improved,
        });
        if verdict == EpochVerdict::Improved {
            best = net.clone();
        }
        if verdict == EpochVerdict::Stop {
            history.stopped_early = true;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch();
    *net = best;
    Ok(history)
}
