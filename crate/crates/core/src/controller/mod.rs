//! Convolutional steering regressor: schedule, passes, training and weight files.

mod net;
mod scalar;
mod schedule;
mod train;
mod weights;

pub use net::{backward, forward, ControllerNet, Loss, Mode, Net, NetError};
pub use scalar::{gemm, Scalar, Strides};
pub use schedule::{param_count, Activation, ConvShape, ConvSpec, DenseSpec, LayerSchedule, ScheduleError};
pub use train::{evaluate_mse, train, Adam, EarlyStopper, EpochRecord, EpochVerdict, History, TrainConfig, TrainError};
pub use weights::{load_weights, save_weights, weights_from_json, weights_to_json, WeightsError, WEIGHTS_FORMAT};
