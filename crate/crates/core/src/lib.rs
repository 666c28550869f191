//! Streaming video deraining toolkit.
//!
//! The pipeline classifies every pixel of every frame as background, rain
//! or moving object, then rebuilds a rain-free frame by sourcing background
//! and rain pixels from a causal background estimate and object pixels from
//! the current frame. Rain is told apart from objects by how briefly it
//! appears at a fixed location, how narrow it is, and how far it sits from
//! moving regions; all three thresholds adapt to the frame rate and
//! resolution.
//!
//! Modules:
//! - [`frame`]: raster types (frames, masks, classmaps, metadata)
//! - [`io`]: bit-exact file formats for sequences and rasters
//! - [`background`]: causal background estimators (temporal median, MoG)
//! - [`detection`]: foreground mask, appearance window, classification
//! - [`streak`]: width and location refinement filters
//! - [`compositor`]: rain-free frame generation
//! - [`rain_synth`]: synthetic rain and scripted ground-truth scenes
//! - [`metrics`]: PSNR, detection scores, CSV reports
//! - [`pipeline`]: per-frame orchestration and the streaming runner

pub mod background;
pub mod compositor;
pub mod detection;
pub mod error;
pub mod frame;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod rain_synth;
pub mod streak;

pub use background::{BackgroundFrame, BackgroundKind, BackgroundModel, MixtureParams};
pub use compositor::compose;
pub use detection::{
    classify, derive_thresholds, extract_foreground, AppearanceMap, AppearanceWindow, Thresholds,
};
pub use error::{Error, Result};
pub use frame::{rgb_to_luma, BinaryMask, ClassMap, Frame, Label, VideoMeta};
pub use metrics::{mask_scores, psnr, FrameScore, MaskScores};
pub use pipeline::{run_derain, PipelineConfig, PipelineState, RunConfig, RunSummary, TruthRefs};
pub use rain_synth::{add_rain, make_scene, scene_frame, RainParams, SceneConfig, SynthConfig};
pub use streak::{
    connected_components, dilate_chebyshev, location_filter, location_radius, width_filter,
    width_threshold, ComponentLabels,
};
