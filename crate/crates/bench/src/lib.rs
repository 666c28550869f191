//! Shared fixtures for the pipeline benchmarks.

use derain_core::frame::Frame;
use derain_core::rain_synth::{add_rain, make_scene, RainParams, SceneConfig};

/// The standard benchmark sequence: the default scene with default rain.
pub fn benchmark_frames(frame_count: u32) -> (Vec<Frame>, SceneConfig) {
    let scene = SceneConfig {
        frame_count,
        ..SceneConfig::default()
    };
    let rain = RainParams::default();
    let (clean, _) = make_scene(&scene).expect("scene");
    let rainy = clean
        .iter()
        .enumerate()
        .map(|(n, f)| add_rain(f, &rain, n as u32).expect("rain").0)
        .collect();
    (rainy, scene)
}
