//! Offline reconstruction of missing segments in leader-follower vehicle
//! trajectory data.
//!
//! Headway series sampled at 10 Hz are scanned for gaps; short gaps are
//! closed by linear interpolation, longer ones by calibrating a
//! car-following model on tri-cube-weighted context windows around the gap,
//! predicting headway through the gap from follower kinematics, and blending
//! the prediction into the far edge with a smooth transition.
//!
//! Module map:
//! - [`traj`]: core time-series/trajectory types, gap detection, kinematics
//! - [`models`]: Gipps, IDM, Pipes and Newell car-following models
//! - [`calibration`]: tri-cube weights, weighted cost, genetic calibration
//! - [`reconstruction`]: gap-filling pipeline and the smooth transition
//! - [`ngsim`]: NGSIM I-80 trajectory ingest and pair extraction
//! - [`scan`]: LIDAR-style point-scan filtering and headway extraction
//! - [`evaluation`]: gap synthesis, RMSE/MAPE scoring, summary tables
//! - [`pairfile`]: the canonical pair file format
//! - [`config`]: run configuration, file loading, defaults

pub mod calibration;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod ngsim;
pub mod pairfile;
pub mod reconstruction;
pub mod scan;
pub mod traj;

pub use error::{Error, Result};

/// Sample interval shared by every series in the toolkit, seconds.
pub const SAMPLE_INTERVAL_S: f64 = 0.1;
