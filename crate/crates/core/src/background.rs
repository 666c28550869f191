//! Causal per-pixel background estimation.
//!
//! Two estimators behind one interface: a sliding-window temporal median
//! (deterministic, exact on static scenes) and a per-pixel Gaussian
//! mixture in the Stauffer–Grimson style. Both are strictly causal: the
//! estimate after frame n depends only on frames 0..=n.
//!
//! When the input is RGB, a 3-channel companion estimate is maintained by
//! running the same estimator independently per channel; the compositor
//! sources replacement pixels from it. Detection itself runs on luma only.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Which estimator backs the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackgroundKind {
    TemporalMedian,
    GaussianMixture,
}

/// Gaussian-mixture tuning knobs.
#[derive(Debug, Clone, Copy)]
pub struct MixtureParams {
    /// Components per pixel.
    pub max_components: usize,
    /// Per-update learning rate alpha.
    pub learning_rate: f32,
    /// Variance assigned to a freshly created component.
    pub initial_variance: f32,
    /// Lower bound applied to variances after every update.
    pub variance_floor: f32,
    /// A sample matches a component when |x - mean| <= match_sigma * sigma.
    pub match_sigma: f32,
}

impl Default for MixtureParams {
    fn default() -> Self {
        Self {
            max_components: 3,
            learning_rate: 0.01,
            initial_variance: 225.0,
            variance_floor: 4.0,
            match_sigma: 2.5,
        }
    }
}

/// Background estimate for one frame position: luma plane plus, for RGB
/// inputs, a color companion used by the compositor.
#[derive(Debug, Clone)]
pub struct BackgroundFrame {
    pub luma: Frame,
    pub color: Option<Frame>,
}

impl BackgroundFrame {
    /// The frame the compositor should source background pixels from.
    pub fn color_plane(&self) -> &Frame {
        self.color.as_ref().unwrap_or(&self.luma)
    }
}

// ---------------------------------------------------------------------------
// temporal median
// ---------------------------------------------------------------------------

/// Ring of the last `cap` planes of one channel.
struct PlaneRing {
    len_px: usize,
    cap: usize,
    planes: VecDeque<Vec<u8>>,
}

impl PlaneRing {
    fn new(len_px: usize, cap: usize) -> Self {
        Self {
            len_px,
            cap,
            planes: VecDeque::with_capacity(cap),
        }
    }

    fn push(&mut self, plane: Vec<u8>) {
        debug_assert_eq!(plane.len(), self.len_px);
        if self.planes.len() == self.cap {
            self.planes.pop_front();
        }
        self.planes.push_back(plane);
    }

    /// Lower median per pixel: the order statistic at index (L-1)/2 of the
    /// L buffered values. Insertion sort keeps the common case (near-constant
    /// columns on static scenes) close to linear.
    fn median_plane(&self, row_px: usize) -> Vec<u8> {
        let n = self.planes.len();
        debug_assert!(n > 0);
        let mid = (n - 1) / 2;
        let mut out = vec![0u8; self.len_px];
        let mut tile = vec![0u8; n * row_px];
        let mut col = vec![0u8; n];
        let rows = self.len_px / row_px;
        for row in 0..rows {
            let off = row * row_px;
            for (k, plane) in self.planes.iter().enumerate() {
                tile[k * row_px..(k + 1) * row_px].copy_from_slice(&plane[off..off + row_px]);
            }
            for x in 0..row_px {
                for k in 0..n {
                    col[k] = tile[k * row_px + x];
                }
                insertion_sort(&mut col);
                out[off + x] = col[mid];
            }
        }
        out
    }

    fn resident_bytes(&self) -> usize {
        self.planes.len() * self.len_px
    }
}

#[inline]
fn insertion_sort(values: &mut [u8]) {
    for i in 1..values.len() {
        let v = values[i];
        let mut j = i;
        while j > 0 && values[j - 1] > v {
            values[j] = values[j - 1];
            j -= 1;
        }
        values[j] = v;
    }
}

// ---------------------------------------------------------------------------
// gaussian mixture
// ---------------------------------------------------------------------------

/// Per-pixel mixture state for one channel, stored flat as
/// (weight, mean, variance) triples. Components are kept sorted by weight,
/// descending, so the estimate is always the first component's mean.
struct MixturePlane {
    len_px: usize,
    params: MixtureParams,
    comps: Vec<f32>,
    active: Vec<u8>,
}

impl MixturePlane {
    fn new(len_px: usize, params: MixtureParams, first: &[u8]) -> Self {
        let k = params.max_components;
        let mut comps = vec![0.0f32; len_px * k * 3];
        for (px, &v) in first.iter().enumerate() {
            let base = px * k * 3;
            comps[base] = 1.0;
            comps[base + 1] = v as f32;
            comps[base + 2] = params.initial_variance;
        }
        Self {
            len_px,
            params,
            comps,
            active: vec![1; len_px],
        }
    }

    fn update_plane(&mut self, plane: &[u8], out: &mut [u8]) {
        debug_assert_eq!(plane.len(), self.len_px);
        let k = self.params.max_components;
        let alpha = self.params.learning_rate;
        let match_sq = self.params.match_sigma * self.params.match_sigma;
        for (px, (&v, out_v)) in plane.iter().zip(out.iter_mut()).enumerate() {
            let base = px * k * 3;
            let comps = &mut self.comps[base..base + k * 3];
            let active = self.active[px] as usize;
            let x = v as f32;

            // first matching component in weight order
            let mut matched = None;
            for c in 0..active {
                let mean = comps[c * 3 + 1];
                let var = comps[c * 3 + 2];
                let d = x - mean;
                if d * d <= match_sq * var {
                    matched = Some(c);
                    break;
                }
            }

            match matched {
                Some(c) => {
                    for j in 0..active {
                        let w = comps[j * 3];
                        comps[j * 3] = (1.0 - alpha) * w + if j == c { alpha } else { 0.0 };
                    }
                    let rho = alpha;
                    let mean = comps[c * 3 + 1] + rho * (x - comps[c * 3 + 1]);
                    let d = x - mean;
                    let var = (1.0 - rho) * comps[c * 3 + 2] + rho * d * d;
                    comps[c * 3 + 1] = mean;
                    comps[c * 3 + 2] = var.max(self.params.variance_floor);
                }
                None => {
                    // replace the weakest component, or grow the set
                    let c = if active < k {
                        self.active[px] = active as u8 + 1;
                        active
                    } else {
                        active - 1
                    };
                    comps[c * 3] = alpha;
                    comps[c * 3 + 1] = x;
                    comps[c * 3 + 2] = self.params.initial_variance;
                }
            }

            let active = self.active[px] as usize;
            let total: f32 = (0..active).map(|j| comps[j * 3]).sum();
            for j in 0..active {
                comps[j * 3] /= total;
            }
            // keep sorted by weight, descending (small k: bubble pass)
            for i in 1..active {
                let mut j = i;
                while j > 0 && comps[(j - 1) * 3] < comps[j * 3] {
                    for f in 0..3 {
                        comps.swap((j - 1) * 3 + f, j * 3 + f);
                    }
                    j -= 1;
                }
            }

            *out_v = comps[1].round().clamp(0.0, 255.0) as u8;
        }
    }

    fn estimate_plane(&self, out: &mut [u8]) {
        let k = self.params.max_components;
        for (px, out_v) in out.iter_mut().enumerate() {
            *out_v = self.comps[px * k * 3 + 1].round().clamp(0.0, 255.0) as u8;
        }
    }

    fn resident_bytes(&self) -> usize {
        self.comps.len() * std::mem::size_of::<f32>() + self.active.len()
    }

    #[cfg(test)]
    fn weight_sum(&self, px: usize) -> f32 {
        let k = self.params.max_components;
        (0..self.active[px] as usize)
            .map(|j| self.comps[px * k * 3 + j * 3])
            .sum()
    }

    #[cfg(test)]
    fn min_variance(&self, px: usize) -> f32 {
        let k = self.params.max_components;
        (0..self.active[px] as usize)
            .map(|j| self.comps[px * k * 3 + j * 3 + 2])
            .fold(f32::INFINITY, f32::min)
    }
}

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

enum ModelState {
    Median {
        luma: PlaneRing,
        color: Option<Box<[PlaneRing; 3]>>,
    },
    Mixture {
        luma: MixturePlane,
        color: Option<Box<[MixturePlane; 3]>>,
    },
}

/// Causal background model over a frame sequence. One writer; updates are
/// strictly sequential in frame order.
pub struct BackgroundModel {
    width: u32,
    height: u32,
    state: ModelState,
    frames_seen: u64,
}

fn channel_plane(frame: &Frame, channel: usize) -> Vec<u8> {
    frame
        .data()
        .iter()
        .skip(channel)
        .step_by(3)
        .copied()
        .collect()
}

impl BackgroundModel {
    /// Seed the model with the first frame of the sequence. `color` must be
    /// given for RGB inputs (and then for every update) and omitted for grey.
    pub fn init(
        kind: BackgroundKind,
        window: usize,
        params: MixtureParams,
        luma: &Frame,
        color: Option<&Frame>,
    ) -> Result<Self> {
        if luma.channels() != 1 {
            return Err(Error::Channel {
                expected: 1,
                actual: luma.channels(),
            });
        }
        if window == 0 {
            return Err(Error::Config("median window must be at least 1".into()));
        }
        if let Some(color) = color {
            if color.channels() != 3 {
                return Err(Error::Channel {
                    expected: 3,
                    actual: color.channels(),
                });
            }
            if color.width() != luma.width() || color.height() != luma.height() {
                return Err(Error::shape((luma.width(), luma.height(), 3), color.dims()));
            }
        }
        let len_px = luma.data().len();
        let state = match kind {
            BackgroundKind::TemporalMedian => {
                let mut ring = PlaneRing::new(len_px, window);
                ring.push(luma.data().to_vec());
                let color = color.map(|c| {
                    Box::new([0, 1, 2].map(|ch| {
                        let mut ring = PlaneRing::new(len_px, window);
                        ring.push(channel_plane(c, ch));
                        ring
                    }))
                });
                ModelState::Median { luma: ring, color }
            }
            BackgroundKind::GaussianMixture => {
                let plane = MixturePlane::new(len_px, params, luma.data());
                let color = color.map(|c| {
                    Box::new(
                        [0, 1, 2]
                            .map(|ch| MixturePlane::new(len_px, params, &channel_plane(c, ch))),
                    )
                });
                ModelState::Mixture { luma: plane, color }
            }
        };
        Ok(Self {
            width: luma.width(),
            height: luma.height(),
            state,
            frames_seen: 1,
        })
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    fn check_input(&self, luma: &Frame, color: Option<&Frame>) -> Result<()> {
        if luma.dims() != (self.width, self.height, 1) {
            return Err(Error::shape((self.width, self.height, 1), luma.dims()));
        }
        let has_color = matches!(
            &self.state,
            ModelState::Median { color: Some(_), .. } | ModelState::Mixture { color: Some(_), .. }
        );
        match (has_color, color) {
            (true, None) => Err(Error::Config(
                "model was initialised with a color companion; update needs one".into(),
            )),
            (false, Some(_)) => Err(Error::Config(
                "model was initialised without a color companion".into(),
            )),
            (true, Some(c)) if c.dims() != (self.width, self.height, 3) => {
                Err(Error::shape((self.width, self.height, 3), c.dims()))
            }
            _ => Ok(()),
        }
    }

    /// Fold the next frame in and return the updated estimate.
    pub fn update(&mut self, luma: &Frame, color: Option<&Frame>) -> Result<BackgroundFrame> {
        self.check_input(luma, color)?;
        self.frames_seen += 1;
        let (w, h) = (self.width, self.height);
        let row_px = w as usize;
        match &mut self.state {
            ModelState::Median {
                luma: ring,
                color: rings,
            } => {
                ring.push(luma.data().to_vec());
                if let (Some(rings), Some(color)) = (rings.as_mut(), color) {
                    for (ch, ring) in rings.iter_mut().enumerate() {
                        ring.push(channel_plane(color, ch));
                    }
                }
                Ok(Self::median_estimate(w, h, row_px, ring, rings.as_deref()))
            }
            ModelState::Mixture {
                luma: plane,
                color: planes,
            } => {
                let mut out = vec![0u8; plane.len_px];
                plane.update_plane(luma.data(), &mut out);
                let luma_frame = Frame::new(w, h, 1, out)?;
                let color_frame = match (planes.as_mut(), color) {
                    (Some(planes), Some(color)) => {
                        Some(Self::mixture_color(w, h, planes, Some(color))?)
                    }
                    _ => None,
                };
                Ok(BackgroundFrame {
                    luma: luma_frame,
                    color: color_frame,
                })
            }
        }
    }

    /// Current estimate without folding a new frame in.
    pub fn estimate(&self) -> BackgroundFrame {
        let (w, h) = (self.width, self.height);
        let row_px = w as usize;
        match &self.state {
            ModelState::Median { luma, color } => {
                Self::median_estimate(w, h, row_px, luma, color.as_deref())
            }
            ModelState::Mixture { luma, color } => {
                let mut out = vec![0u8; luma.len_px];
                luma.estimate_plane(&mut out);
                let luma_frame = Frame::new(w, h, 1, out).expect("plane size");
                let color_frame = color.as_ref().map(|planes| {
                    let mut interleaved = vec![0u8; planes[0].len_px * 3];
                    let mut plane = vec![0u8; planes[0].len_px];
                    for (ch, p) in planes.iter().enumerate() {
                        p.estimate_plane(&mut plane);
                        for (px, &v) in plane.iter().enumerate() {
                            interleaved[px * 3 + ch] = v;
                        }
                    }
                    Frame::new(w, h, 3, interleaved).expect("plane size")
                });
                BackgroundFrame {
                    luma: luma_frame,
                    color: color_frame,
                }
            }
        }
    }

    fn median_estimate(
        w: u32,
        h: u32,
        row_px: usize,
        luma: &PlaneRing,
        color: Option<&[PlaneRing; 3]>,
    ) -> BackgroundFrame {
        let luma_frame = Frame::new(w, h, 1, luma.median_plane(row_px)).expect("plane size");
        let color_frame = color.map(|rings| {
            let mut interleaved = vec![0u8; rings[0].len_px * 3];
            for (ch, ring) in rings.iter().enumerate() {
                let plane = ring.median_plane(row_px);
                for (px, &v) in plane.iter().enumerate() {
                    interleaved[px * 3 + ch] = v;
                }
            }
            Frame::new(w, h, 3, interleaved).expect("plane size")
        });
        BackgroundFrame {
            luma: luma_frame,
            color: color_frame,
        }
    }

    fn mixture_color(
        w: u32,
        h: u32,
        planes: &mut [MixturePlane; 3],
        color: Option<&Frame>,
    ) -> Result<Frame> {
        let color = color.expect("checked by caller");
        let mut interleaved = vec![0u8; planes[0].len_px * 3];
        let mut out = vec![0u8; planes[0].len_px];
        for (ch, plane) in planes.iter_mut().enumerate() {
            plane.update_plane(&channel_plane(color, ch), &mut out);
            for (px, &v) in out.iter().enumerate() {
                interleaved[px * 3 + ch] = v;
            }
        }
        Frame::new(w, h, 3, interleaved)
    }

    /// Bytes of raster/model storage currently held, for the memory gauge.
    pub fn resident_bytes(&self) -> usize {
        match &self.state {
            ModelState::Median { luma, color } => {
                luma.resident_bytes()
                    + color
                        .as_ref()
                        .map_or(0, |r| r.iter().map(PlaneRing::resident_bytes).sum())
            }
            ModelState::Mixture { luma, color } => {
                luma.resident_bytes()
                    + color
                        .as_ref()
                        .map_or(0, |p| p.iter().map(MixturePlane::resident_bytes).sum())
            }
        }
    }
}
