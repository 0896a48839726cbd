//! Kinematics, dead reckoning and energetics for tag-instrumented dolphins
//! swimming a prescribed out-and-back lap.
//!
//! The crate is organised as a pipeline of pure stages:
//!
//! - [`ingest`]: tag CSV parsing, resampling onto the 5 Hz master timeline,
//!   moving-average smoothing, and lat/lon to local metric projection.
//! - [`orientation`]: gradient-descent AHRS fusion of the 50 Hz IMU stream.
//! - [`kinematics`]: tangential/normal acceleration, planar angular rate.
//! - [`localization`]: dead-reckoned track, curvature radius, circle fits.
//! - [`energetics`]: rigid-body drag/thrust model, work, cost of transport,
//!   power-law fits.
//! - [`segmentation`]: lap and cornering-event detection, swimming phases,
//!   percent-lap normalisation, per-lap metrics.
//! - [`simulator`]: analytic ground-truth laps and synthetic tag channels.
//! - [`pipeline`]: end-to-end trial analysis wiring the stages together.

pub mod energetics;
pub mod error;
pub mod ingest;
pub mod kinematics;
pub mod localization;
pub mod orientation;
pub mod pipeline;
pub mod segmentation;
pub mod simulator;

pub use energetics::{AnimalParams, GammaTable, PowerLawFit, PowerSample};
pub use error::{Error, Result};
pub use ingest::{Channel, LagoonBoundary, MasterTimeline, TagSeries};
pub use kinematics::KinematicState;
pub use localization::{CircleFit, Track};
pub use orientation::{EulerPose, Quaternion};
pub use pipeline::{AnalysisConfig, TrialAnalysis};
pub use segmentation::{LapEvents, LapSummary, NormalizedLap, Phase};
pub use simulator::LapScenario;

/// Version of the analysis library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
