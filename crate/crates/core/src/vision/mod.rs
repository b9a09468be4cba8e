//! Synthetic cameras, the segmentation oracle and the dataset pipeline.

pub mod camera;
pub mod dataset;
pub mod palette;
pub mod pipeline;
pub mod render;

pub use camera::{CameraId, CameraRig};
pub use dataset::{
    augment, augment_random, build_dataset, collect_samples, Dataset, DatasetConfig, DatasetError,
    Manifest, Sample, Split, SplitCounts,
};
pub use palette::{PixelClass, SegClass, SegmentedImage, SegmentationError};
pub use pipeline::{denormalize_image, normalize_image, AugmentConfig, AugmentKind, Augmentation};
pub use render::{class_map, render, render_center_with_segmentation, segment_oracle, ClassMap};
