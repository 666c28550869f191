//! Deterministic file formats for frame sequences and pipeline rasters.
//!
//! Frames are stored one file per frame as `frame_%06d.png` (or binary
//! PGM/PPM), with a plain-text `meta.txt` carrying the frame rate,
//! dimensions and frame count. Classmaps are single-channel PGM rasters
//! with the fixed encoding background=0, rain=128, object=255.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::{BinaryMask, ClassMap, Frame, Label, VideoMeta};

/// Conventional meta file name inside a sequence directory.
pub const META_FILE: &str = "meta.txt";

/// On-disk frame container. PNG and PNM decode to identical rasters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFormat {
    Png,
    /// Binary PGM for single-channel frames, binary PPM for RGB.
    Pnm,
}

impl FrameFormat {
    pub fn extension_for(self, channels: u8) -> &'static str {
        match (self, channels) {
            (FrameFormat::Png, _) => "png",
            (FrameFormat::Pnm, 1) => "pgm",
            (FrameFormat::Pnm, _) => "ppm",
        }
    }
}

pub fn frame_file_name(index: u32, extension: &str) -> String {
    format!("frame_{index:06}.{extension}")
}

pub fn output_file_name(index: u32) -> String {
    format!("out_{index:06}.png")
}

/// Locate the file for frame `index`: `frame_` then `out_` prefixes,
/// trying png, then pgm, then ppm.
pub fn find_frame_file(dir: &Path, index: u32) -> Option<PathBuf> {
    for prefix in ["frame", "out"] {
        for ext in ["png", "pgm", "ppm"] {
            let path = dir.join(format!("{prefix}_{index:06}.{ext}"));
            if path.is_file() {
                return Some(path);
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// meta files
// ---------------------------------------------------------------------------

pub fn read_meta(path: &Path) -> Result<VideoMeta> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Meta(format!("cannot read {}: {e}", path.display())))?;
    let mut fps_num = None;
    let mut fps_den = None;
    let mut width = None;
    let mut height = None;
    let mut frame_count = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Meta(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        let value: u32 = value.trim().parse().map_err(|_| {
            Error::Meta(format!(
                "{}:{}: invalid value for {key}: {value:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        match key.trim() {
            "fps_num" => fps_num = Some(value),
            "fps_den" => fps_den = Some(value),
            "width" => width = Some(value),
            "height" => height = Some(value),
            "frame_count" => frame_count = Some(value),
            _ => {} // unknown keys are ignored
        }
    }
    let missing = |name: &str| Error::Meta(format!("{}: missing key {name}", path.display()));
    let meta = VideoMeta {
        fps_num: fps_num.ok_or_else(|| missing("fps_num"))?,
        fps_den: fps_den.ok_or_else(|| missing("fps_den"))?,
        width: width.ok_or_else(|| missing("width"))?,
        height: height.ok_or_else(|| missing("height"))?,
        frame_count: frame_count.ok_or_else(|| missing("frame_count"))?,
    };
    meta.validate()?;
    Ok(meta)
}

pub fn write_meta(path: &Path, meta: &VideoMeta) -> Result<()> {
    meta.validate()?;
    let text = format!(
        "fps_num={}\nfps_den={}\nwidth={}\nheight={}\nframe_count={}\n",
        meta.fps_num, meta.fps_den, meta.width, meta.height, meta.frame_count
    );
    fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// single-frame codecs
// ---------------------------------------------------------------------------

/// Load one frame; the codec is chosen by file extension.
pub fn load_frame(path: &Path) -> Result<Frame> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => load_png(path),
        Some("pgm") | Some("ppm") => load_pnm(path),
        other => Err(Error::Decode(format!(
            "unsupported frame extension {other:?} for {}",
            path.display()
        ))),
    }
}

/// Write one frame; the codec is chosen by file extension.
pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => write_png(path, frame),
        Some("pgm") | Some("ppm") => write_pnm(path, frame),
        other => Err(Error::Decode(format!(
            "unsupported frame extension {other:?} for {}",
            path.display()
        ))),
    }
}

fn load_png(path: &Path) -> Result<Frame> {
    let dynamic =
        image::open(path).map_err(|e| Error::Decode(format!("{}: {e}", path.display())))?;
    match dynamic {
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            Frame::new(w, h, 1, img.into_raw())
        }
        image::DynamicImage::ImageRgb8(img) => {
            let (w, h) = img.dimensions();
            Frame::new(w, h, 3, img.into_raw())
        }
        other => Err(Error::Decode(format!(
            "{}: unsupported color type {:?}, expected 8-bit grey or RGB",
            path.display(),
            other.color()
        ))),
    }
}

fn write_png(path: &Path, frame: &Frame) -> Result<()> {
    let color = match frame.channels() {
        1 => image::ExtendedColorType::L8,
        _ => image::ExtendedColorType::Rgb8,
    };
    image::save_buffer(path, frame.data(), frame.width(), frame.height(), color)
        .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))))
}

fn write_pnm(path: &Path, frame: &Frame) -> Result<()> {
    let magic = if frame.channels() == 1 { "P5" } else { "P6" };
    let mut out = Vec::with_capacity(frame.data().len() + 32);
    write!(out, "{magic}\n{} {}\n255\n", frame.width(), frame.height())?;
    out.extend_from_slice(frame.data());
    fs::write(path, out)?;
    Ok(())
}

fn load_pnm(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path)?;
    let bad = |msg: &str| Error::Decode(format!("{}: {msg}", path.display()));

    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        // skip whitespace and '#' comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Decode(format!(
                "{}: truncated header",
                path.display()
            )));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = token(&bytes)?;
    let channels: u8 = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        _ => return Err(bad("not a binary PGM/PPM file")),
    };
    let width: u32 = token(&bytes)?.parse().map_err(|_| bad("invalid width"))?;
    let height: u32 = token(&bytes)?.parse().map_err(|_| bad("invalid height"))?;
    let maxval: u32 = token(&bytes)?.parse().map_err(|_| bad("invalid maxval"))?;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("missing raster separator"));
    }
    pos += 1;
    let expected = width as usize * height as usize * channels as usize;
    if bytes.len() - pos < expected {
        return Err(bad("raster data truncated"));
    }
    Frame::new(width, height, channels, bytes[pos..pos + expected].to_vec())
}

// ---------------------------------------------------------------------------
// sequences
// ---------------------------------------------------------------------------

/// Streaming reader over `frame_%06d.*` files; yields frames in index order
/// and validates shape against the meta as it goes.
pub struct SequenceReader {
    dir: PathBuf,
    meta: VideoMeta,
    next: u32,
    channels: Option<u8>,
}

impl SequenceReader {
    /// Open `dir` using its `meta.txt`.
    pub fn open(dir: &Path) -> Result<Self> {
        let meta = read_meta(&dir.join(META_FILE))?;
        Ok(Self::with_meta(dir, meta))
    }

    pub fn with_meta(dir: &Path, meta: VideoMeta) -> Self {
        Self {
            dir: dir.to_path_buf(),
            meta,
            next: 0,
            channels: None,
        }
    }

    pub fn meta(&self) -> &VideoMeta {
        &self.meta
    }

    /// Channel count observed on the first frame, if any was read yet.
    pub fn channels(&self) -> Option<u8> {
        self.channels
    }

    fn read_next(&mut self) -> Result<Frame> {
        let index = self.next;
        let path = find_frame_file(&self.dir, index).ok_or_else(|| Error::SequenceGap {
            dir: self.dir.clone(),
            index,
        })?;
        let frame = load_frame(&path)?;
        if frame.width() != self.meta.width || frame.height() != self.meta.height {
            return Err(Error::shape(
                (self.meta.width, self.meta.height, frame.channels()),
                frame.dims(),
            ));
        }
        match self.channels {
            None => self.channels = Some(frame.channels()),
            Some(c) if c != frame.channels() => {
                return Err(Error::shape(
                    (self.meta.width, self.meta.height, c),
                    frame.dims(),
                ))
            }
            Some(_) => {}
        }
        self.next += 1;
        Ok(frame)
    }
}

impl Iterator for SequenceReader {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.meta.frame_count {
            return None;
        }
        Some(self.read_next())
    }
}

/// Load a whole sequence into memory. All frames must share one shape and
/// the index range 0..frame_count must be contiguous.
pub fn load_sequence(dir: &Path, meta_path: &Path) -> Result<(Vec<Frame>, VideoMeta)> {
    let meta = read_meta(meta_path)?;
    let frames: Vec<Frame> = SequenceReader::with_meta(dir, meta).collect::<Result<_>>()?;
    Ok((frames, meta))
}

/// Write frames as `frame_%06d` files plus a `meta.txt`, creating `dir`.
pub fn write_sequence(
    dir: &Path,
    frames: &[Frame],
    meta: &VideoMeta,
    format: FrameFormat,
) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::Config("cannot write an empty sequence".into()));
    }
    if frames.len() != meta.frame_count as usize {
        return Err(Error::Meta(format!(
            "meta frame_count {} does not match {} frames",
            meta.frame_count,
            frames.len()
        )));
    }
    fs::create_dir_all(dir)?;
    for (i, frame) in frames.iter().enumerate() {
        if frame.width() != meta.width || frame.height() != meta.height {
            return Err(Error::shape(
                (meta.width, meta.height, frames[0].channels()),
                frame.dims(),
            ));
        }
        frames[0].ensure_same_shape(frame)?;
        let name = frame_file_name(i as u32, format.extension_for(frame.channels()));
        write_frame(&dir.join(name), frame)?;
    }
    write_meta(&dir.join(META_FILE), meta)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// classmaps and binary masks
// ---------------------------------------------------------------------------

/// Write a classmap as a PGM raster with background=0, rain=128, object=255.
pub fn write_classmap(map: &ClassMap, path: &Path) -> Result<()> {
    let data: Vec<u8> = map.labels().iter().map(|l| l.to_byte()).collect();
    let frame = Frame::new(map.width(), map.height(), 1, data)?;
    write_pnm(path, &frame)
}

pub fn read_classmap(path: &Path) -> Result<ClassMap> {
    let frame = load_pnm(path)?;
    if frame.channels() != 1 {
        return Err(Error::Decode(format!(
            "{}: classmap must be single-channel",
            path.display()
        )));
    }
    let labels = frame
        .data()
        .iter()
        .map(|&b| {
            Label::from_byte(b).ok_or_else(|| {
                Error::Decode(format!("{}: invalid classmap byte {b}", path.display()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ClassMap::from_labels(frame.width(), frame.height(), labels)
}

/// Write a binary mask as a PGM raster with 0/255 values.
pub fn write_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let data: Vec<u8> = mask.bits().iter().map(|&b| b * 255).collect();
    let frame = Frame::new(mask.width(), mask.height(), 1, data)?;
    write_pnm(path, &frame)
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let frame = load_frame(path)?;
    mask_from_frame(&frame)
        .ok_or_else(|| Error::Decode(format!("{}: mask bytes must be 0 or 255", path.display())))
}

/// Reinterpret a 0/255 grey frame as a binary mask.
pub fn mask_from_frame(frame: &Frame) -> Option<BinaryMask> {
    if frame.channels() != 1 {
        return None;
    }
    let bits = frame
        .data()
        .iter()
        .map(|&b| match b {
            0 => Some(0),
            255 => Some(1),
            _ => None,
        })
        .collect::<Option<Vec<u8>>>()?;
    BinaryMask::from_bits(frame.width(), frame.height(), bits).ok()
}
