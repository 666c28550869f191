//! Foreground extraction, the temporal-appearance window, and the
//! rain/object/background classification.
//!
//! A pixel is foreground when its luma deviates from the background
//! estimate by strictly more than `tau`. The appearance window counts, per
//! pixel, in how many of the last `m` frames it was foreground; rain is
//! foreground that appears for at most `duration` of those frames, anything
//! more persistent is a moving object. Both `duration` and `m` are derived
//! from the frame rate so the classification is frame-rate invariant.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::frame::{BinaryMask, ClassMap, Frame, Label, VideoMeta};

/// Detection thresholds derived from the frame rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    /// Intensity threshold for foreground extraction.
    pub tau: u8,
    /// Appearance-count threshold separating rain from objects (`d`).
    pub duration: u32,
    /// Appearance window length in frames (`m`), always > `duration`.
    pub window: u32,
}

#[inline]
fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor() as u32
}

/// Derive the duration threshold and window length from the frame rate:
/// `duration = max(1, round_half_up(duration_frac * fps))` and
/// `window = max(duration + 1, round_half_up(0.5 * fps))`.
pub fn derive_thresholds(meta: &VideoMeta, tau: u8, duration_frac: f64) -> Result<Thresholds> {
    if meta.fps_num == 0 || meta.fps_den == 0 {
        return Err(Error::Config(format!(
            "fps must be positive, got {}/{}",
            meta.fps_num, meta.fps_den
        )));
    }
    if !(duration_frac > 0.0 && duration_frac < 1.0) {
        return Err(Error::Config(format!(
            "duration fraction must be in (0,1), got {duration_frac}"
        )));
    }
    let fps = meta.fps();
    let duration = round_half_up(duration_frac * fps).max(1);
    let window = round_half_up(0.5 * fps).max(duration + 1);
    Ok(Thresholds {
        tau,
        duration,
        window,
    })
}

/// Mark pixels whose absolute difference from the background estimate
/// strictly exceeds `tau`.
pub fn extract_foreground(frame: &Frame, background: &Frame, tau: u8) -> Result<BinaryMask> {
    frame.ensure_same_shape(background)?;
    if frame.channels() != 1 {
        return Err(Error::Channel {
            expected: 1,
            actual: frame.channels(),
        });
    }
    let mut mask = BinaryMask::zeroed(frame.width(), frame.height());
    let tau = tau as i16;
    for ((bit, &a), &b) in mask
        .bits_mut()
        .iter_mut()
        .zip(frame.data())
        .zip(background.data())
    {
        *bit = ((a as i16 - b as i16).abs() > tau) as u8;
    }
    Ok(mask)
}

/// Per-pixel count of foreground appearances over the retained window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppearanceMap {
    width: u32,
    height: u32,
    counts: Vec<u16>,
}

impl AppearanceMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.counts[y as usize * self.width as usize + x as usize]
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    pub fn raster_bytes(&self) -> usize {
        self.counts.len() * 2
    }
}

/// Sliding window over the last `m` foreground masks with incrementally
/// maintained per-pixel sums. Masks are stored bit-packed; the running
/// counts are updated by subtracting the evicted mask and adding the new
/// one, so an update is O(pixels) regardless of the window length.
pub struct AppearanceWindow {
    width: u32,
    height: u32,
    window: usize,
    ring: VecDeque<Vec<u8>>,
    counts: Vec<u16>,
}

impl AppearanceWindow {
    /// Panics if `window` is zero.
    pub fn new(window: u32, width: u32, height: u32) -> Self {
        assert!(window >= 1, "appearance window must hold at least one mask");
        let px = width as usize * height as usize;
        Self {
            width,
            height,
            window: window as usize,
            ring: VecDeque::with_capacity(window as usize),
            counts: vec![0; px],
        }
    }

    pub fn window(&self) -> u32 {
        self.window as u32
    }

    pub fn frames_retained(&self) -> usize {
        self.ring.len()
    }

    /// Fold the next foreground mask in and return the updated counts.
    pub fn update(&mut self, fg: &BinaryMask) -> Result<AppearanceMap> {
        if fg.width() != self.width || fg.height() != self.height {
            return Err(Error::shape(
                (self.width, self.height, 1),
                (fg.width(), fg.height(), 1),
            ));
        }
        if self.ring.len() == self.window {
            let evicted = self.ring.pop_front().expect("ring non-empty");
            for_each_set_bit(&evicted, self.counts.len(), |px| {
                debug_assert!(self.counts[px] > 0);
                self.counts[px] -= 1;
            });
        }
        let packed = pack_bits(fg.bits());
        for_each_set_bit(&packed, self.counts.len(), |px| {
            self.counts[px] += 1;
        });
        self.ring.push_back(packed);
        debug_assert!(self.counts.iter().all(|&c| c as usize <= self.ring.len()));
        Ok(AppearanceMap {
            width: self.width,
            height: self.height,
            counts: self.counts.clone(),
        })
    }

    pub fn resident_bytes(&self) -> usize {
        self.ring.iter().map(Vec::len).sum::<usize>() + self.counts.len() * 2
    }
}

fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut packed = vec![0u8; bits.len().div_ceil(8)];
    for (px, &bit) in bits.iter().enumerate() {
        packed[px / 8] |= bit << (px % 8);
    }
    packed
}

fn for_each_set_bit(packed: &[u8], len: usize, mut f: impl FnMut(usize)) {
    for (byte_idx, &byte) in packed.iter().enumerate() {
        let mut byte = byte;
        while byte != 0 {
            let bit = byte.trailing_zeros() as usize;
            let px = byte_idx * 8 + bit;
            if px < len {
                f(px);
            }
            byte &= byte - 1;
        }
    }
}

/// Label every pixel. Pixels outside the current foreground are background;
/// foreground pixels are objects when their appearance count exceeds
/// `duration`, rain otherwise.
pub fn classify(counts: &AppearanceMap, fg: &BinaryMask, duration: u32) -> Result<ClassMap> {
    if counts.width() != fg.width() || counts.height() != fg.height() {
        return Err(Error::shape(
            (counts.width(), counts.height(), 1),
            (fg.width(), fg.height(), 1),
        ));
    }
    if duration == 0 {
        return Err(Error::Config(
            "duration threshold must be at least 1".into(),
        ));
    }
    let labels = counts
        .counts()
        .iter()
        .zip(fg.bits())
        .map(|(&count, &bit)| {
            if bit == 0 {
                Label::Background
            } else if count as u32 > duration {
                Label::Object
            } else {
                Label::Rain
            }
        })
        .collect();
    ClassMap::from_labels(fg.width(), fg.height(), labels)
}
