//! Shared test support: brute-force reference implementations used as
//! oracles, plus deterministic generators for random rasters and scenes.
//!
//! Every oracle here is written as directly as possible from the
//! per-pixel definitions and stays independent of the library's
//! implementation choices (selection networks, incremental sums,
//! union-find, separable dilation, ...).

#![allow(dead_code)]

use std::collections::VecDeque;

use derain_core::frame::{BinaryMask, ClassMap, Frame, Label};
use derain_core::rain_synth::{add_rain, scene_frame, ObjectConfig, RainParams, SceneConfig};
use rand::rngs::StdRng;
use rand::Rng;

// ---------------------------------------------------------------------------
// random rasters
// ---------------------------------------------------------------------------

pub fn random_frame(rng: &mut StdRng, w: u32, h: u32, channels: u8) -> Frame {
    let data = (0..w as usize * h as usize * channels as usize)
        .map(|_| rng.random())
        .collect();
    Frame::new(w, h, channels, data).unwrap()
}

pub fn random_mask(rng: &mut StdRng, w: u32, h: u32, density: f64) -> BinaryMask {
    let mut mask = BinaryMask::zeroed(w, h);
    for y in 0..h {
        for x in 0..w {
            if rng.random_bool(density) {
                mask.set(x, y, 1);
            }
        }
    }
    mask
}

pub fn random_map(rng: &mut StdRng, w: u32, h: u32, p_rain: f64, p_object: f64) -> ClassMap {
    let labels = (0..w as usize * h as usize)
        .map(|_| {
            let roll: f64 = rng.random();
            if roll < p_rain {
                Label::Rain
            } else if roll < p_rain + p_object {
                Label::Object
            } else {
                Label::Background
            }
        })
        .collect();
    ClassMap::from_labels(w, h, labels).unwrap()
}

/// A classmap shaped like real detector output: a few compact object blobs
/// and scattered short rain segments, rather than uniform noise.
pub fn rain_like_map(rng: &mut StdRng, w: u32, h: u32) -> ClassMap {
    let mut map = ClassMap::filled(w, h, Label::Background);
    for _ in 0..rng.random_range(1..=2) {
        let bw = rng.random_range(4..=10).min(w);
        let bh = rng.random_range(4..=10).min(h);
        let x0 = rng.random_range(0..=w - bw);
        let y0 = rng.random_range(0..=h - bh);
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                map.set(x, y, Label::Object);
            }
        }
    }
    for _ in 0..rng.random_range(10..=20) {
        let x = rng.random_range(0..w);
        let y0 = rng.random_range(0..h);
        let len = rng.random_range(1..=4);
        for dy in 0..len {
            if y0 + dy < h && map.get(x, y0 + dy) == Label::Background {
                map.set(x, y0 + dy, Label::Rain);
            }
        }
    }
    map
}

// ---------------------------------------------------------------------------
// per-stage oracles
// ---------------------------------------------------------------------------

/// BT.601 luma evaluated directly on the thousandths-scaled coefficients.
pub fn luma_oracle(frame: &Frame) -> Frame {
    assert_eq!(frame.channels(), 3);
    let mut data = Vec::new();
    for px in frame.data().chunks_exact(3) {
        let scaled: u32 = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
        data.push(((scaled + 500) / 1000) as u8);
    }
    Frame::new(frame.width(), frame.height(), 1, data).unwrap()
}

/// Lower median of a full sort of the window, per pixel.
pub fn median_oracle(window: &[&Frame]) -> Frame {
    let first = window[0];
    let mid = (window.len() - 1) / 2;
    let mut data = Vec::with_capacity(first.data().len());
    for i in 0..first.data().len() {
        let mut values: Vec<u8> = window.iter().map(|f| f.data()[i]).collect();
        values.sort_unstable();
        data.push(values[mid]);
    }
    Frame::new(first.width(), first.height(), first.channels(), data).unwrap()
}

pub fn foreground_oracle(frame: &Frame, background: &Frame, tau: u8) -> BinaryMask {
    let mut mask = BinaryMask::zeroed(frame.width(), frame.height());
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            let diff = (frame.sample(x, y, 0) as i32 - background.sample(x, y, 0) as i32).abs();
            if diff > tau as i32 {
                mask.set(x, y, 1);
            }
        }
    }
    mask
}

/// Appearance counts by full resummation over an explicitly stored window.
pub struct TaOracle {
    window: usize,
    history: VecDeque<BinaryMask>,
}

impl TaOracle {
    pub fn new(window: u32) -> Self {
        Self {
            window: window as usize,
            history: VecDeque::new(),
        }
    }

    pub fn update(&mut self, fg: &BinaryMask) -> Vec<u16> {
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(fg.clone());
        let px = fg.width() as usize * fg.height() as usize;
        let mut counts = vec![0u16; px];
        for mask in &self.history {
            for (c, &b) in counts.iter_mut().zip(mask.bits()) {
                *c += b as u16;
            }
        }
        counts
    }
}

pub fn classify_oracle(counts: &[u16], fg: &BinaryMask, duration: u32) -> ClassMap {
    let mut map = ClassMap::filled(fg.width(), fg.height(), Label::Background);
    for y in 0..fg.height() {
        for x in 0..fg.width() {
            let px = (y * fg.width() + x) as usize;
            let label = if fg.get(x, y) == 0 {
                Label::Background
            } else if counts[px] as u32 > duration {
                Label::Object
            } else {
                Label::Rain
            };
            map.set(x, y, label);
        }
    }
    map
}

/// Width filter by measuring, for every rain pixel, its run extent with
/// explicit left/right walks.
pub fn width_oracle(map: &ClassMap, w_max: u32) -> ClassMap {
    let mut out = map.clone();
    for y in 0..map.height() {
        for x in 0..map.width() {
            if map.get(x, y) != Label::Rain {
                continue;
            }
            let mut left = x;
            while left > 0 && map.get(left - 1, y) == Label::Rain {
                left -= 1;
            }
            let mut right = x;
            while right + 1 < map.width() && map.get(right + 1, y) == Label::Rain {
                right += 1;
            }
            if right - left + 1 >= w_max {
                out.set(x, y, Label::Object);
            }
        }
    }
    out
}

/// Flood-fill component labelling, ids ordered by each component's first
/// pixel in row-major scan order.
pub fn components_oracle(mask: &BinaryMask) -> Vec<u32> {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; (w * h) as usize];
    let mut next = 0u32;
    for sy in 0..h {
        for sx in 0..w {
            let start = (sy * w + sx) as usize;
            if mask.get(sx, sy) == 0 || labels[start] != 0 {
                continue;
            }
            next += 1;
            let mut stack = vec![(sx, sy)];
            labels[start] = next;
            while let Some((x, y)) = stack.pop() {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as u32, ny as u32);
                        let idx = (ny * w + nx) as usize;
                        if mask.get(nx, ny) == 1 && labels[idx] == 0 {
                            labels[idx] = next;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
        }
    }
    labels
}

/// Location filter by exhaustive minimum Chebyshev distance from every rain
/// component to every object pixel.
pub fn location_oracle(map: &ClassMap, r_loc: u32) -> ClassMap {
    let (w, h) = (map.width(), map.height());
    let mut rain = BinaryMask::zeroed(w, h);
    let mut objects = Vec::new();
    for y in 0..h {
        for x in 0..w {
            match map.get(x, y) {
                Label::Rain => rain.set(x, y, 1),
                Label::Object => objects.push((x as i64, y as i64)),
                Label::Background => {}
            }
        }
    }
    let labels = components_oracle(&rain);
    let component_count = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut min_dist = vec![i64::MAX; component_count + 1];
    for y in 0..h {
        for x in 0..w {
            let id = labels[(y * w + x) as usize] as usize;
            if id == 0 {
                continue;
            }
            for &(ox, oy) in &objects {
                let d = (x as i64 - ox).abs().max((y as i64 - oy).abs());
                min_dist[id] = min_dist[id].min(d);
            }
        }
    }
    let mut out = map.clone();
    for y in 0..h {
        for x in 0..w {
            let id = labels[(y * w + x) as usize] as usize;
            if id != 0 && min_dist[id] <= r_loc as i64 {
                out.set(x, y, Label::Object);
            }
        }
    }
    out
}

pub fn compose_oracle(input: &Frame, background: &Frame, map: &ClassMap) -> Frame {
    let channels = input.channels();
    let mut data = Vec::with_capacity(input.data().len());
    for y in 0..input.height() {
        for x in 0..input.width() {
            let src = match map.get(x, y) {
                Label::Object => input,
                _ => background,
            };
            for c in 0..channels {
                data.push(src.sample(x, y, c));
            }
        }
    }
    Frame::new(input.width(), input.height(), channels, data).unwrap()
}

pub fn psnr_oracle(a: &Frame, b: &Frame) -> f64 {
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for y in 0..a.height() {
        for x in 0..a.width() {
            for c in 0..a.channels() {
                let d = a.sample(x, y, c) as f64 - b.sample(x, y, c) as f64;
                sum += d * d;
                count += 1;
            }
        }
    }
    if sum == 0.0 {
        return 100.0;
    }
    10.0 * (255.0f64 * 255.0 / (sum / count as f64)).log10()
}

pub struct ScoresOracle {
    pub rain_recall: f64,
    pub rain_precision: f64,
    pub object_recall: f64,
}

pub fn scores_oracle(
    pred: &ClassMap,
    truth_rain: &BinaryMask,
    truth_object: &BinaryMask,
) -> ScoresOracle {
    let mut rain_hit = 0.0;
    let mut rain_truth = 0.0;
    let mut rain_pred = 0.0;
    let mut obj_hit = 0.0;
    let mut obj_truth = 0.0;
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            let label = pred.get(x, y);
            if truth_rain.get(x, y) == 1 {
                rain_truth += 1.0;
                if label == Label::Rain {
                    rain_hit += 1.0;
                }
            }
            if label == Label::Rain {
                rain_pred += 1.0;
            }
            if truth_object.get(x, y) == 1 {
                obj_truth += 1.0;
                if label == Label::Object {
                    obj_hit += 1.0;
                }
            }
        }
    }
    ScoresOracle {
        rain_recall: if rain_truth == 0.0 {
            1.0
        } else {
            rain_hit / rain_truth
        },
        rain_precision: if rain_pred == 0.0 {
            1.0
        } else {
            rain_hit / rain_pred
        },
        object_recall: if obj_truth == 0.0 {
            1.0
        } else {
            obj_hit / obj_truth
        },
    }
}

// ---------------------------------------------------------------------------
// composed whole-pipeline oracle
// ---------------------------------------------------------------------------

pub struct OracleSettings {
    pub tau: u8,
    pub duration: u32,
    pub window: u32,
    pub median_window: u32,
    pub w_max: u32,
    pub r_loc: u32,
}

/// End-to-end reference pipeline: every stage is the brute-force oracle,
/// chained in the fixed stage order with the same warm-up policy.
pub struct OracleDerain {
    settings: OracleSettings,
    luma_history: VecDeque<Frame>,
    color_history: VecDeque<Frame>,
    ta: TaOracle,
    cursor: u32,
}

impl OracleDerain {
    pub fn new(settings: OracleSettings) -> Self {
        let ta = TaOracle::new(settings.window);
        Self {
            settings,
            luma_history: VecDeque::new(),
            color_history: VecDeque::new(),
            ta,
            cursor: 0,
        }
    }

    pub fn step(&mut self, frame: &Frame) -> (Frame, ClassMap) {
        let s = &self.settings;
        let luma = if frame.channels() == 3 {
            luma_oracle(frame)
        } else {
            frame.clone()
        };
        if self.luma_history.len() == s.median_window as usize {
            self.luma_history.pop_front();
            self.color_history.pop_front();
        }
        self.luma_history.push_back(luma.clone());
        self.color_history.push_back(frame.clone());

        let bg_luma = median_oracle(&self.luma_history.iter().collect::<Vec<_>>());
        let bg_color = median_oracle(&self.color_history.iter().collect::<Vec<_>>());

        let fg = foreground_oracle(&luma, &bg_luma, s.tau);
        let counts = self.ta.update(&fg);

        let n = self.cursor;
        self.cursor += 1;
        if n < s.window {
            return (
                frame.clone(),
                ClassMap::filled(frame.width(), frame.height(), Label::Background),
            );
        }
        let map = classify_oracle(&counts, &fg, s.duration);
        let map = width_oracle(&map, s.w_max);
        let map = location_oracle(&map, s.r_loc);
        let out = compose_oracle(frame, &bg_color, &map);
        (out, map)
    }
}

// ---------------------------------------------------------------------------
// evaluation scenes
// ---------------------------------------------------------------------------

/// One frame tuple of the evaluation sequence used by the invariance and
/// end-to-end tests: a static lead-in (the object parked, no rain) for
/// `still_frames`, then the object moves and rain falls.
///
/// Keeping the first frames static makes the runs exactly comparable under
/// frame-rate changes: partially filled model windows only ever see
/// constant pixels.
pub struct StagedScene {
    pub scene: SceneConfig,
    pub rain: RainParams,
    pub still_frames: u32,
}

impl StagedScene {
    pub fn frame(&self, n: u32) -> (Frame, Frame, BinaryMask, BinaryMask) {
        let moved = n.saturating_sub(self.still_frames);
        let base = &self.scene.object;
        let frozen = SceneConfig {
            object: ObjectConfig {
                x: position_1d(base.x, base.vx, moved, self.scene.width - base.width),
                y: position_1d(base.y, base.vy, moved, self.scene.height - base.height),
                vx: 0,
                vy: 0,
                ..*base
            },
            frame_count: 1,
            ..self.scene.clone()
        };
        let (clean, object_mask) = scene_frame(&frozen, 0).unwrap();
        if n < self.still_frames {
            let rain_mask = BinaryMask::zeroed(self.scene.width, self.scene.height);
            (clean.clone(), clean, rain_mask, object_mask)
        } else {
            let (rainy, rain_mask) = add_rain(&clean, &self.rain, n).unwrap();
            (clean, rainy, rain_mask, object_mask)
        }
    }

    pub fn frames(&self, count: u32) -> Vec<(Frame, Frame, BinaryMask, BinaryMask)> {
        (0..count).map(|n| self.frame(n)).collect()
    }
}

fn position_1d(start: u32, v: i32, n: u32, limit: u32) -> u32 {
    if limit == 0 {
        return 0;
    }
    let period = 2 * limit as i64;
    let u = (start as i64 + v as i64 * n as i64).rem_euclid(period);
    if u <= limit as i64 {
        u as u32
    } else {
        (period - u) as u32
    }
}
