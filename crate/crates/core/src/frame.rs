//! Core raster types shared by every pipeline stage.

use crate::error::{Error, Result};

/// An 8-bit raster frame, 1 (grey) or 3 (RGB) channels, row-major with
/// interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Channel {
                expected: 1,
                actual: channels,
            });
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::Decode(format!(
                "frame data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// A frame with every sample set to `value`. Panics on zero dimensions.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Self {
        let data = vec![value; width as usize * height as usize * channels as usize];
        Self::new(width, height, channels, data).expect("valid fill dimensions")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn dims(&self) -> (u32, u32, u8) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn sample(&self, x: u32, y: u32, channel: u8) -> u8 {
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize
            + channel as usize;
        self.data[idx]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.dims() == other.dims()
    }

    pub fn ensure_same_shape(&self, other: &Frame) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(self.dims(), other.dims()))
        }
    }

    /// Raster storage size in bytes, used by the pipeline memory gauge.
    pub fn raster_bytes(&self) -> usize {
        self.data.len()
    }
}

/// BT.601 luma of one RGB triple, rounded half up.
///
/// Computed in integer arithmetic (coefficients scaled by 1000) so the
/// rounding is exact on every input.
#[inline]
pub fn luma_byte(r: u8, g: u8, b: u8) -> u8 {
    let sum = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((sum + 500) / 1000) as u8
}

/// Convert a 3-channel frame to single-channel luma (BT.601, round half up).
pub fn rgb_to_luma(frame: &Frame) -> Result<Frame> {
    if frame.channels() != 3 {
        return Err(Error::Channel {
            expected: 3,
            actual: frame.channels(),
        });
    }
    let data = frame
        .data()
        .chunks_exact(3)
        .map(|px| luma_byte(px[0], px[1], px[2]))
        .collect();
    Frame::new(frame.width(), frame.height(), 1, data)
}

/// A per-pixel {0,1} mask with the same geometry as its source frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<u8>,
}

impl BinaryMask {
    /// All-zero mask.
    pub fn zeroed(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::Decode(format!(
                "mask data length {} does not match {width}x{height}",
                bits.len()
            )));
        }
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Decode(format!("mask value {bad} is not 0 or 1")));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, bit: u8) {
        debug_assert!(bit <= 1);
        self.bits[y as usize * self.width as usize + x as usize] = bit;
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn raster_bytes(&self) -> usize {
        self.bits.len()
    }
}

/// Pixel classification produced by the detector and refined by the filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Background,
    Rain,
    Object,
}

impl Label {
    /// File encoding used by classmap rasters.
    pub fn to_byte(self) -> u8 {
        match self {
            Label::Background => 0,
            Label::Rain => 128,
            Label::Object => 255,
        }
    }

    pub fn from_byte(byte: u8) -> Option<Self> {
        match byte {
            0 => Some(Label::Background),
            128 => Some(Label::Rain),
            255 => Some(Label::Object),
            _ => None,
        }
    }
}

/// Per-pixel label raster; every pixel carries exactly one label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    width: u32,
    height: u32,
    labels: Vec<Label>,
}

impl ClassMap {
    pub fn filled(width: u32, height: u32, label: Label) -> Self {
        Self {
            width,
            height,
            labels: vec![label; width as usize * height as usize],
        }
    }

    pub fn from_labels(width: u32, height: u32, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != width as usize * height as usize {
            return Err(Error::Decode(format!(
                "label count {} does not match {width}x{height}",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Label {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, label: Label) {
        self.labels[y as usize * self.width as usize + x as usize] = label;
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [Label] {
        &mut self.labels
    }

    pub fn same_shape(&self, other: &ClassMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn raster_bytes(&self) -> usize {
        self.labels.len()
    }
}

/// Sequence-level metadata stored alongside frame files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VideoMeta {
    pub fps_num: u32,
    pub fps_den: u32,
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
}

impl VideoMeta {
    pub fn validate(&self) -> Result<()> {
        if self.fps_num == 0 || self.fps_den == 0 {
            return Err(Error::Meta(format!(
                "fps must be positive, got {}/{}",
                self.fps_num, self.fps_den
            )));
        }
        if self.frame_count == 0 {
            return Err(Error::Meta("frame_count must be at least 1".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Meta(format!(
                "dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn fps(&self) -> f64 {
        self.fps_num as f64 / self.fps_den as f64
    }
}
