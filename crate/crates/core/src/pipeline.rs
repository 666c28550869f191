//! Frame-by-frame orchestration of the deraining pipeline and the
//! directory-to-directory runner behind the `derain` subcommand.
//!
//! Per frame the stages run in a fixed order: luma conversion, background
//! update, foreground extraction, appearance update, classification, width
//! filter, location filter, compositing. The first `window` frames are
//! warm-up: the models fill their windows, the classmap is all-background
//! and the input passes through verbatim.
//!
//! Processing is strictly causal and streaming: frame n is fully emitted
//! before frame n+1 is read, and resident memory is bounded by the model
//! windows, independent of the sequence length.

use std::fs;
use std::path::{Path, PathBuf};

use crate::background::{BackgroundFrame, BackgroundKind, BackgroundModel, MixtureParams};
use crate::compositor::compose;
use crate::detection::{
    classify, derive_thresholds, extract_foreground, AppearanceMap, AppearanceWindow, Thresholds,
};
use crate::error::{Error, Result};
use crate::frame::{rgb_to_luma, BinaryMask, ClassMap, Frame, Label, VideoMeta};
use crate::io;
use crate::metrics::{mask_scores, psnr, write_report, FrameScore};
use crate::streak::{location_filter_mut, location_radius, width_filter_mut, width_threshold};

/// Tunables of the processing pipeline (paths excluded).
#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    /// Foreground intensity threshold.
    pub tau: u8,
    /// Rain/object duration threshold as a fraction of the frame rate.
    pub duration_frac: f64,
    /// Maximum streak width as a fraction of the frame width.
    pub width_frac: f64,
    /// Location-filter radius at a 320-pixel-wide frame.
    pub loc_radius_base: u32,
    pub bg_kind: BackgroundKind,
    pub mixture: MixtureParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau: 20,
            duration_frac: 0.25,
            width_frac: 0.05,
            loc_radius_base: 3,
            bg_kind: BackgroundKind::TemporalMedian,
            mixture: MixtureParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, frac) in [
            ("duration-frac", self.duration_frac),
            ("width-frac", self.width_frac),
        ] {
            if !(frac > 0.0 && frac < 1.0) {
                return Err(Error::Config(format!(
                    "{name} must be in (0,1), got {frac}"
                )));
            }
        }
        if self.loc_radius_base == 0 {
            return Err(Error::Config("loc-radius must be at least 1".into()));
        }
        Ok(())
    }
}

/// Intermediate rasters of one step, kept only when stage dumps are on.
pub struct StageTrace {
    pub background: BackgroundFrame,
    pub foreground: BinaryMask,
    pub appearance: AppearanceMap,
    pub after_classify: ClassMap,
    pub after_width: ClassMap,
}

/// Result of processing one frame.
pub struct StepOutput {
    pub frame: Frame,
    pub map: ClassMap,
    pub trace: Option<StageTrace>,
}

/// Mutable pipeline state; one writer, advanced exactly once per frame.
pub struct PipelineState {
    width: u32,
    height: u32,
    channels: Option<u8>,
    thresholds: Thresholds,
    w_max: u32,
    r_loc: u32,
    bg_kind: BackgroundKind,
    mixture: MixtureParams,
    background: Option<BackgroundModel>,
    appearance: AppearanceWindow,
    cursor: u32,
    collect_trace: bool,
    peak_resident: usize,
}

impl PipelineState {
    pub fn new(meta: &VideoMeta, cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        meta.validate()?;
        let thresholds = derive_thresholds(meta, cfg.tau, cfg.duration_frac)?;
        Ok(Self {
            width: meta.width,
            height: meta.height,
            channels: None,
            thresholds,
            w_max: width_threshold(meta.width, cfg.width_frac),
            r_loc: location_radius(meta.width, cfg.loc_radius_base),
            bg_kind: cfg.bg_kind,
            mixture: cfg.mixture,
            background: None,
            appearance: AppearanceWindow::new(thresholds.window, meta.width, meta.height),
            cursor: 0,
            collect_trace: false,
            peak_resident: 0,
        })
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn width_threshold(&self) -> u32 {
        self.w_max
    }

    pub fn location_radius(&self) -> u32 {
        self.r_loc
    }

    /// Number of leading passthrough frames.
    pub fn warmup_len(&self) -> u32 {
        self.thresholds.window
    }

    /// Median window length: one appearance window back and forward of centre.
    pub fn median_window(&self) -> u32 {
        2 * self.thresholds.window + 1
    }

    pub fn cursor(&self) -> u32 {
        self.cursor
    }

    pub fn set_collect_trace(&mut self, on: bool) {
        self.collect_trace = on;
    }

    /// Highest observed total of resident raster bytes (model state plus
    /// live per-frame buffers).
    pub fn peak_resident_bytes(&self) -> usize {
        self.peak_resident
    }

    fn state_bytes(&self) -> usize {
        self.background.as_ref().map_or(0, |b| b.resident_bytes())
            + self.appearance.resident_bytes()
    }

    /// Record `ambient` extra live raster bytes against the peak.
    pub fn note_resident(&mut self, ambient: usize) {
        self.peak_resident = self.peak_resident.max(self.state_bytes() + ambient);
    }

    /// Process the next frame. Every stage state advances exactly once even
    /// during warm-up, when the output is the input passed through verbatim.
    pub fn step(&mut self, frame: &Frame) -> Result<StepOutput> {
        let n = self.cursor;
        let stage = |e: Error, s: &'static str| e.at_stage(n, s);

        if frame.width() != self.width || frame.height() != self.height {
            return Err(stage(
                Error::shape((self.width, self.height, frame.channels()), frame.dims()),
                "input",
            ));
        }
        match self.channels {
            None => self.channels = Some(frame.channels()),
            Some(c) if c != frame.channels() => {
                return Err(stage(
                    Error::shape((self.width, self.height, c), frame.dims()),
                    "input",
                ))
            }
            Some(_) => {}
        }

        let color = (frame.channels() == 3).then_some(frame);
        let luma = match color {
            Some(rgb) => rgb_to_luma(rgb).map_err(|e| stage(e, "rgb_to_luma"))?,
            None => frame.clone(),
        };

        let background = match self.background.as_mut() {
            None => {
                let model = BackgroundModel::init(
                    self.bg_kind,
                    self.median_window() as usize,
                    self.mixture,
                    &luma,
                    color,
                )
                .map_err(|e| stage(e, "background"))?;
                let estimate = model.estimate();
                self.background = Some(model);
                estimate
            }
            Some(model) => model
                .update(&luma, color)
                .map_err(|e| stage(e, "background"))?,
        };

        let foreground = extract_foreground(&luma, &background.luma, self.thresholds.tau)
            .map_err(|e| stage(e, "extract_foreground"))?;
        let appearance = self
            .appearance
            .update(&foreground)
            .map_err(|e| stage(e, "appearance"))?;

        let warmup = n < self.thresholds.window;
        let (map, output, after_classify, after_width) = if warmup {
            let map = ClassMap::filled(self.width, self.height, Label::Background);
            let trace_maps = self
                .collect_trace
                .then(|| (map.clone(), map.clone()))
                .unzip();
            (map, frame.clone(), trace_maps.0, trace_maps.1)
        } else {
            let mut map = classify(&appearance, &foreground, self.thresholds.duration)
                .map_err(|e| stage(e, "classify"))?;
            let after_classify = self.collect_trace.then(|| map.clone());
            width_filter_mut(&mut map, self.w_max);
            let after_width = self.collect_trace.then(|| map.clone());
            location_filter_mut(&mut map, self.r_loc);
            let output =
                compose(frame, background.color_plane(), &map).map_err(|e| stage(e, "compose"))?;
            (map, output, after_classify, after_width)
        };

        let trace = self.collect_trace.then(|| StageTrace {
            background: background.clone(),
            foreground: foreground.clone(),
            appearance: appearance.clone(),
            after_classify: after_classify.expect("collected"),
            after_width: after_width.expect("collected"),
        });

        // everything above is still live here; sample the high-water mark
        let ambient = frame.raster_bytes()
            + luma.raster_bytes()
            + background.luma.raster_bytes()
            + background.color.as_ref().map_or(0, Frame::raster_bytes)
            + foreground.raster_bytes()
            + appearance.raster_bytes()
            + map.raster_bytes()
            + output.raster_bytes()
            + trace.as_ref().map_or(0, |t| {
                t.background.luma.raster_bytes()
                    + t.background.color.as_ref().map_or(0, Frame::raster_bytes)
                    + t.foreground.raster_bytes()
                    + t.appearance.raster_bytes()
                    + t.after_classify.raster_bytes()
                    + t.after_width.raster_bytes()
            });
        self.note_resident(ambient);

        self.cursor += 1;
        Ok(StepOutput {
            frame: output,
            map,
            trace,
        })
    }
}

/// Ground-truth directories for scored runs.
#[derive(Debug, Clone)]
pub struct TruthRefs {
    pub clean_dir: PathBuf,
    pub rain_dir: PathBuf,
    pub object_dir: PathBuf,
}

/// A full directory-to-directory run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub pipeline: PipelineConfig,
    /// Write the final classmap per frame (`mask_%06d.pgm`).
    pub dump_masks: bool,
    /// Write per-stage rasters (`bg_`, `fg_`, `ta_`, `mask_w_`, `mask_l_`).
    pub dump_stages: bool,
    pub truth: Option<TruthRefs>,
    /// CSV report path; requires `truth`.
    pub report: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            pipeline: PipelineConfig::default(),
            dump_masks: false,
            dump_stages: false,
            truth: None,
            report: None,
        }
    }
}

/// Outcome of [`run_derain`].
pub struct RunSummary {
    pub frame_count: u32,
    pub scores: Option<Vec<FrameScore>>,
    pub peak_resident_bytes: usize,
    /// Bytes of one input frame (width x height x channels).
    pub frame_bytes: usize,
}

impl RunSummary {
    /// Peak resident raster storage in units of input frames.
    pub fn peak_frame_buffers(&self) -> f64 {
        self.peak_resident_bytes as f64 / self.frame_bytes as f64
    }
}

struct TruthReaders {
    clean: io::SequenceReader,
    rain: io::SequenceReader,
    object: io::SequenceReader,
}

impl TruthReaders {
    fn open(refs: &TruthRefs, meta: &VideoMeta) -> Result<Self> {
        let open = |dir: &Path| -> Result<io::SequenceReader> {
            let reader = io::SequenceReader::open(dir)?;
            let t = reader.meta();
            if (t.width, t.height) != (meta.width, meta.height) || t.frame_count < meta.frame_count
            {
                return Err(Error::Meta(format!(
                    "truth sequence {} does not match the input geometry",
                    dir.display()
                )));
            }
            Ok(reader)
        };
        Ok(Self {
            clean: open(&refs.clean_dir)?,
            rain: open(&refs.rain_dir)?,
            object: open(&refs.object_dir)?,
        })
    }

    fn next(&mut self, n: u32) -> Result<(Frame, BinaryMask, BinaryMask)> {
        let take = |r: &mut io::SequenceReader, what: &str| -> Result<Frame> {
            r.next().ok_or_else(|| {
                Error::Meta(format!("truth sequence {what} ended before frame {n}"))
            })?
        };
        let clean = take(&mut self.clean, "clean")?;
        let rain = take(&mut self.rain, "rain")?;
        let object = take(&mut self.object, "object")?;
        let to_mask = |f: &Frame, what: &str| {
            io::mask_from_frame(f)
                .ok_or_else(|| Error::Decode(format!("truth {what} frame {n} is not a 0/255 mask")))
        };
        let rain = to_mask(&rain, "rain")?;
        let object = to_mask(&object, "object")?;
        Ok((clean, rain, object))
    }
}

/// Stream the input sequence through the pipeline, writing `out_%06d.png`
/// (and optional dumps) as each frame completes. Errors carry the frame
/// index and stage they occurred in.
pub fn run_derain(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.pipeline.validate()?;
    if cfg.report.is_some() && cfg.truth.is_none() {
        return Err(Error::Config(
            "--report requires the truth directories".into(),
        ));
    }
    let meta = io::read_meta(&cfg.input_dir.join(io::META_FILE))?;
    let mut state = PipelineState::new(&meta, &cfg.pipeline)?;
    state.set_collect_trace(cfg.dump_stages);

    fs::create_dir_all(&cfg.output_dir)?;
    io::write_meta(&cfg.output_dir.join(io::META_FILE), &meta)?;

    let mut reader = io::SequenceReader::with_meta(&cfg.input_dir, meta);
    let mut truth = cfg
        .truth
        .as_ref()
        .map(|refs| TruthReaders::open(refs, &meta))
        .transpose()?;
    let mut scores = truth
        .as_ref()
        .map(|_| Vec::with_capacity(meta.frame_count as usize));

    for n in 0..meta.frame_count {
        let frame = reader
            .next()
            .expect("reader yields frame_count items")
            .map_err(|e| e.at_stage(n, "read"))?;

        let out = state.step(&frame)?;

        io::write_frame(&cfg.output_dir.join(io::output_file_name(n)), &out.frame)
            .map_err(|e| e.at_stage(n, "write"))?;
        if cfg.dump_masks {
            io::write_classmap(&out.map, &cfg.output_dir.join(format!("mask_{n:06}.pgm")))
                .map_err(|e| e.at_stage(n, "dump"))?;
        }
        if let Some(trace) = &out.trace {
            write_stage_dumps(
                &cfg.output_dir,
                n,
                trace,
                &out.map,
                state.thresholds().window,
            )
            .map_err(|e| e.at_stage(n, "dump"))?;
        }

        if let (Some(truth), Some(scores)) = (truth.as_mut(), scores.as_mut()) {
            let (clean, rain_mask, object_mask) =
                truth.next(n).map_err(|e| e.at_stage(n, "truth"))?;
            let detection = mask_scores(&out.map, &rain_mask, &object_mask)
                .map_err(|e| e.at_stage(n, "score"))?;
            scores.push(FrameScore {
                frame_index: n,
                psnr_input_db: psnr(&frame, &clean).map_err(|e| e.at_stage(n, "score"))?,
                psnr_output_db: psnr(&out.frame, &clean).map_err(|e| e.at_stage(n, "score"))?,
                rain_recall: detection.rain_recall,
                rain_precision: detection.rain_precision,
                object_recall: detection.object_recall,
            });
            state.note_resident(
                frame.raster_bytes()
                    + out.frame.raster_bytes()
                    + out.map.raster_bytes()
                    + clean.raster_bytes()
                    + rain_mask.raster_bytes()
                    + object_mask.raster_bytes(),
            );
        }
    }

    if let (Some(path), Some(scores)) = (&cfg.report, &scores) {
        write_report(scores, path)?;
    }

    let frame_bytes =
        meta.width as usize * meta.height as usize * reader.channels().unwrap_or(1) as usize;
    Ok(RunSummary {
        frame_count: meta.frame_count,
        scores,
        peak_resident_bytes: state.peak_resident_bytes(),
        frame_bytes,
    })
}

fn write_stage_dumps(
    dir: &Path,
    n: u32,
    trace: &StageTrace,
    final_map: &ClassMap,
    window: u32,
) -> Result<()> {
    io::write_frame(&dir.join(format!("bg_{n:06}.png")), &trace.background.luma)?;
    io::write_mask(&trace.foreground, &dir.join(format!("fg_{n:06}.pgm")))?;
    // appearance counts scaled to the byte range
    let scaled: Vec<u8> = trace
        .appearance
        .counts()
        .iter()
        .map(|&c| ((c as u32 * 255) / window.max(1)).min(255) as u8)
        .collect();
    let ta = Frame::new(
        trace.appearance.width(),
        trace.appearance.height(),
        1,
        scaled,
    )?;
    io::write_frame(&dir.join(format!("ta_{n:06}.pgm")), &ta)?;
    io::write_classmap(&trace.after_width, &dir.join(format!("mask_w_{n:06}.pgm")))?;
    io::write_classmap(final_map, &dir.join(format!("mask_l_{n:06}.pgm")))?;
    Ok(())
}
