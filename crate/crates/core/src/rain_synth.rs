//! Reproducible synthetic rain and scripted test scenes.
//!
//! Streaks are hard (un-antialiased) lines so the ground-truth mask marks
//! exactly the touched pixels. Per-frame placement is drawn from an
//! independent sub-stream, so a pixel rained on in one frame is very
//! unlikely to be rained on in the next, matching how real streaks move
//! between frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{luma_byte, BinaryMask, Frame};

/// Parameters of the streak generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RainParams {
    pub streaks_per_frame: u32,
    /// Mean streak length in pixels.
    pub length_mean: f64,
    /// Standard deviation of the streak length.
    pub length_std: f64,
    /// Streak direction is drawn uniformly within this many degrees of vertical.
    pub angle_deg: f64,
    /// Streak thickness in pixels.
    pub streak_width: u32,
    /// Added to every touched sample, saturating at 255.
    pub brightness_delta: u8,
    pub rng_seed: u64,
}

impl Default for RainParams {
    /// The pinned evaluation-benchmark rain: 40 streaks per frame, length
    /// 12±3 px, within 10° of vertical, 1 px wide, +80 intensity.
    fn default() -> Self {
        Self {
            streaks_per_frame: 40,
            length_mean: 12.0,
            length_std: 3.0,
            angle_deg: 10.0,
            streak_width: 1,
            brightness_delta: 80,
            rng_seed: 42,
        }
    }
}

impl RainParams {
    pub fn validate(&self) -> Result<()> {
        if self.length_mean <= 0.0 {
            return Err(Error::Config(format!(
                "length_mean must be positive, got {}",
                self.length_mean
            )));
        }
        if self.length_std < 0.0 || !self.length_std.is_finite() {
            return Err(Error::Config(format!(
                "length_std must be non-negative, got {}",
                self.length_std
            )));
        }
        if self.streak_width == 0 {
            return Err(Error::Config("streak_width must be at least 1".into()));
        }
        if !(0.0..=45.0).contains(&self.angle_deg) {
            return Err(Error::Config(format!(
                "angle_deg must be in [0, 45], got {}",
                self.angle_deg
            )));
        }
        Ok(())
    }
}

/// Per-frame sub-seed: splitmix64 over the seed xored with the
/// golden-ratio-scaled frame index. The constants are the standard
/// splitmix64 increments (0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9,
/// 0x94D049BB133111EB); the mix is pure integer arithmetic, so frame
/// streams are identical on every platform.
pub fn mix_seed(seed: u64, frame_index: u32) -> u64 {
    let mut z = seed ^ (frame_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Overlay synthetic streaks on `frame`. Returns the rained frame and the
/// mask of exactly the touched pixels. Identical `(params, frame_index)`
/// always produce bit-identical output.
pub fn add_rain(
    frame: &Frame,
    params: &RainParams,
    frame_index: u32,
) -> Result<(Frame, BinaryMask)> {
    params.validate()?;
    let (w, h) = (frame.width(), frame.height());
    let mut mask = BinaryMask::zeroed(w, h);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.rng_seed, frame_index));
    let length_dist = if params.length_std > 0.0 {
        Some(
            Normal::new(params.length_mean, params.length_std)
                .map_err(|e| Error::Config(format!("invalid length distribution: {e}")))?,
        )
    } else {
        None
    };

    for _ in 0..params.streaks_per_frame {
        let x0 = rng.random_range(0..w) as f64;
        let y0 = rng.random_range(0..h) as f64;
        let angle = if params.angle_deg > 0.0 {
            rng.random_range(-params.angle_deg..=params.angle_deg)
        } else {
            0.0
        };
        let length = match &length_dist {
            Some(dist) => dist.sample(&mut rng),
            None => params.length_mean,
        };
        let steps = length.round().max(1.0) as u32;
        let theta = angle.to_radians();
        let (dx, dy) = (theta.sin(), theta.cos());
        for t in 0..steps {
            let x = (x0 + t as f64 * dx).round() as i64;
            let y = (y0 + t as f64 * dy).round() as i64;
            for o in 0..params.streak_width as i64 {
                let xo = x + o;
                if xo >= 0 && xo < w as i64 && y >= 0 && y < h as i64 {
                    mask.set(xo as u32, y as u32, 1);
                }
            }
        }
    }

    // brighten each touched pixel exactly once, across all channels
    let mut out = frame.clone();
    let channels = frame.channels() as usize;
    let delta = params.brightness_delta;
    for (px, &bit) in mask.bits().iter().enumerate() {
        if bit == 1 {
            for sample in &mut out.data_mut()[px * channels..(px + 1) * channels] {
                *sample = sample.saturating_add(delta);
            }
        }
    }
    Ok((out, mask))
}

/// A rectangular object of constant color sliding over a static background.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectConfig {
    pub width: u32,
    pub height: u32,
    /// Top-left corner at frame 0.
    pub x: u32,
    pub y: u32,
    /// Integer velocity in pixels per frame. Motion reflects off the frame
    /// edges, so the object never leaves the frame once it fits.
    pub vx: i32,
    pub vy: i32,
    pub color: [u8; 3],
}

/// Scripted clean scene: a seeded gradient-plus-noise background and one
/// moving rectangle with exact per-frame masks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
    pub fps_num: u32,
    pub fps_den: u32,
    /// 1 for grey scenes, 3 for RGB.
    pub channels: u8,
    pub seed: u64,
    pub object: ObjectConfig,
}

impl Default for SceneConfig {
    /// The pinned evaluation-benchmark scene: 320x240 RGB, 150 frames at
    /// 32 fps, with a 40x40 object moving at (2,0).
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            frame_count: 150,
            fps_num: 32,
            fps_den: 1,
            channels: 3,
            seed: 7,
            object: ObjectConfig {
                width: 40,
                height: 40,
                x: 24,
                y: 100,
                vx: 2,
                vy: 0,
                color: [230, 232, 226],
            },
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("scene dimensions must be positive".into()));
        }
        if self.frame_count == 0 {
            return Err(Error::Config("frame_count must be at least 1".into()));
        }
        if self.fps_num == 0 || self.fps_den == 0 {
            return Err(Error::Config("fps must be positive".into()));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::Config(format!(
                "channels must be 1 or 3, got {}",
                self.channels
            )));
        }
        let o = &self.object;
        if o.width == 0 || o.height == 0 {
            return Err(Error::Config("object dimensions must be positive".into()));
        }
        if o.width > self.width || o.height > self.height {
            return Err(Error::Config(format!(
                "object {}x{} does not fit in a {}x{} frame",
                o.width, o.height, self.width, self.height
            )));
        }
        if o.x + o.width > self.width || o.y + o.height > self.height {
            return Err(Error::Config(format!(
                "object at ({},{}) leaves the frame bounds",
                o.x, o.y
            )));
        }
        Ok(())
    }

    pub fn meta(&self) -> crate::frame::VideoMeta {
        crate::frame::VideoMeta {
            fps_num: self.fps_num,
            fps_den: self.fps_den,
            width: self.width,
            height: self.height,
            frame_count: self.frame_count,
        }
    }

    /// Object top-left corner at `frame_index`, reflected off the edges.
    pub fn object_position(&self, frame_index: u32) -> (u32, u32) {
        let reflect = |start: u32, v: i32, limit: u32| -> u32 {
            if limit == 0 {
                return 0;
            }
            let period = 2 * limit as i64;
            let raw = start as i64 + v as i64 * frame_index as i64;
            let u = raw.rem_euclid(period);
            if u <= limit as i64 {
                u as u32
            } else {
                (period - u) as u32
            }
        };
        (
            reflect(
                self.object.x,
                self.object.vx,
                self.width - self.object.width,
            ),
            reflect(
                self.object.y,
                self.object.vy,
                self.height - self.object.height,
            ),
        )
    }
}

/// Generate one clean frame and its object mask. Pure in `frame_index`,
/// so frames can be produced in any order.
pub fn scene_frame(cfg: &SceneConfig, frame_index: u32) -> Result<(Frame, BinaryMask)> {
    cfg.validate()?;
    if frame_index >= cfg.frame_count {
        return Err(Error::Config(format!(
            "frame index {frame_index} out of range 0..{}",
            cfg.frame_count
        )));
    }
    let (w, h, channels) = (cfg.width, cfg.height, cfg.channels);

    // static background: smooth gradient plus per-sample noise in [-8, 8],
    // identical for every frame of the scene
    let mut noise_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, u32::MAX));
    let mut data = Vec::with_capacity((w * h * channels as u32) as usize);
    let channel_offset = [0i32, 6, -6];
    for y in 0..h {
        for x in 0..w {
            let grad = 40
                + (x as i32 * 90) / (w.max(2) - 1) as i32
                + (y as i32 * 40) / (h.max(2) - 1) as i32;
            for c in 0..channels {
                let noise = noise_rng.random_range(-8i32..=8);
                let v = grad + channel_offset[c as usize] + noise;
                data.push(v.clamp(0, 255) as u8);
            }
        }
    }
    let mut frame = Frame::new(w, h, channels, data)?;

    // paint the object and its mask
    let (ox, oy) = cfg.object_position(frame_index);
    let mut mask = BinaryMask::zeroed(w, h);
    let color = cfg.object.color;
    let grey = luma_byte(color[0], color[1], color[2]);
    for y in oy..oy + cfg.object.height {
        for x in ox..ox + cfg.object.width {
            mask.set(x, y, 1);
            let base = ((y * w + x) * channels as u32) as usize;
            if channels == 1 {
                frame.data_mut()[base] = grey;
            } else {
                frame.data_mut()[base..base + 3].copy_from_slice(&color);
            }
        }
    }
    Ok((frame, mask))
}

/// Materialise the whole scene.
pub fn make_scene(cfg: &SceneConfig) -> Result<(Vec<Frame>, Vec<BinaryMask>)> {
    cfg.validate()?;
    let mut frames = Vec::with_capacity(cfg.frame_count as usize);
    let mut masks = Vec::with_capacity(cfg.frame_count as usize);
    for i in 0..cfg.frame_count {
        let (frame, mask) = scene_frame(cfg, i)?;
        frames.push(frame);
        masks.push(mask);
    }
    Ok((frames, masks))
}

/// On-disk JSON configuration for the `synth` subcommand.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SynthConfig {
    pub scene: SceneConfig,
    pub rain: RainParams,
}
