//! Hazard-aware vision-based steering at desk scale.
//!
//! A synthetic driving world renders camera frames and ground-truth
//! segmentations, a threat value weights a blend of the two, and a small
//! convolutional regressor learns to steer from the blended frames. The
//! [`eval`] module compares three pipeline wirings against a scripted driver.

pub mod cli;
pub mod config;
pub mod controller;
pub mod eval;
pub mod image;
pub mod pnm;
pub mod rng;
pub mod steering;
pub mod table;
pub mod threat;
pub mod vision;
pub mod world;

pub use image::{ImageTensor, PixelRange};
pub use rng::Rng;
pub use steering::{steering_to_direction, DrivingDirection, SteeringAngle};
