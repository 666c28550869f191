//! Width and location refinement of the classmap.
//!
//! Rain streaks are narrow and isolated. The width filter relabels any
//! horizontal run of rain pixels at least `w_max` long as object; the
//! location filter relabels whole rain components that come within a
//! Chebyshev radius of the object region. Both filters only ever turn
//! rain into object; background and object pixels are fixed points.

use crate::frame::{BinaryMask, ClassMap, Label};

/// Resolution-adaptive maximum streak width:
/// `max(1, round_half_up(width_frac * frame_width))`.
pub fn width_threshold(frame_width: u32, width_frac: f64) -> u32 {
    ((width_frac * frame_width as f64 + 0.5).floor() as u32).max(1)
}

/// Location radius scaled from its base value at a 320-pixel-wide frame:
/// `max(1, round_half_up(base * frame_width / 320))`.
pub fn location_radius(frame_width: u32, base_radius: u32) -> u32 {
    let scaled = (base_radius as f64 * frame_width as f64 / 320.0 + 0.5).floor() as u32;
    scaled.max(1)
}

/// Relabel as object every maximal horizontal run of rain pixels whose
/// length is not strictly below `w_max`.
pub fn width_filter(map: &ClassMap, w_max: u32) -> ClassMap {
    let mut out = map.clone();
    width_filter_mut(&mut out, w_max);
    out
}

/// In-place variant of [`width_filter`].
pub fn width_filter_mut(map: &mut ClassMap, w_max: u32) {
    let width = map.width() as usize;
    let w_max = w_max as usize;
    for row in map.labels_mut().chunks_exact_mut(width) {
        let mut x = 0;
        while x < width {
            if row[x] != Label::Rain {
                x += 1;
                continue;
            }
            let start = x;
            while x < width && row[x] == Label::Rain {
                x += 1;
            }
            // rain keeps its label only while the run is shorter than w_max
            if x - start >= w_max {
                for label in &mut row[start..x] {
                    *label = Label::Object;
                }
            }
        }
    }
}

/// Relabel as object every 8-connected rain component that intersects the
/// Chebyshev dilation of the object region by `r_loc`. Components farther
/// away stay rain; a component is always relabelled in full.
pub fn location_filter(map: &ClassMap, r_loc: u32) -> ClassMap {
    let mut out = map.clone();
    location_filter_mut(&mut out, r_loc);
    out
}

/// In-place variant of [`location_filter`].
pub fn location_filter_mut(map: &mut ClassMap, r_loc: u32) {
    let (w, h) = (map.width(), map.height());
    let mut object = BinaryMask::zeroed(w, h);
    let mut rain = BinaryMask::zeroed(w, h);
    for (px, &label) in map.labels().iter().enumerate() {
        match label {
            Label::Object => object.bits_mut()[px] = 1,
            Label::Rain => rain.bits_mut()[px] = 1,
            Label::Background => {}
        }
    }
    if object.count_ones() == 0 {
        return;
    }

    let near_object = dilate_chebyshev(&object, r_loc);
    let components = connected_components(&rain);

    // components touching the dilated object region
    let mut absorbed = vec![false; components.count() as usize + 1];
    for (px, &id) in components.labels().iter().enumerate() {
        if id != 0 && near_object.bits()[px] == 1 {
            absorbed[id as usize] = true;
        }
    }
    for (px, &id) in components.labels().iter().enumerate() {
        if id != 0 && absorbed[id as usize] {
            map.labels_mut()[px] = Label::Object;
        }
    }
}

/// Dilation by a square structuring element: every pixel within Chebyshev
/// distance `radius` of a set pixel becomes set. Separable, so it runs as a
/// horizontal pass followed by a vertical pass.
pub fn dilate_chebyshev(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let r = radius as usize;
    let mut horiz = vec![0u8; w * h];
    for y in 0..h {
        let row = &mask.bits()[y * w..(y + 1) * w];
        let out = &mut horiz[y * w..(y + 1) * w];
        for (x, &bit) in row.iter().enumerate() {
            if bit == 1 {
                let lo = x.saturating_sub(r);
                let hi = (x + r).min(w - 1);
                for o in &mut out[lo..=hi] {
                    *o = 1;
                }
            }
        }
    }
    let mut result = BinaryMask::zeroed(mask.width(), mask.height());
    for y in 0..h {
        for x in 0..w {
            if horiz[y * w + x] == 1 {
                let lo = y.saturating_sub(r);
                let hi = (y + r).min(h - 1);
                for yy in lo..=hi {
                    result.bits_mut()[yy * w + x] = 1;
                }
            }
        }
    }
    result
}

/// Connected-component labelling of set pixels.
#[derive(Debug, Clone)]
pub struct ComponentLabels {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    count: u32,
}

impl ComponentLabels {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Component id per pixel; 0 for unset pixels.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    /// Number of components; ids run 1..=count.
    pub fn count(&self) -> u32 {
        self.count
    }
}

/// Label 8-connected components of set pixels with a two-pass union-find.
/// Ids are assigned in row-major order of each component's first pixel,
/// starting at 1; unset pixels get id 0.
pub fn connected_components(mask: &BinaryMask) -> ComponentLabels {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let bits = mask.bits();
    let mut provisional = vec![0u32; w * h];
    let mut parent: Vec<u32> = vec![0]; // parent[0] unused
    let mut next = 1u32;

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }

    for y in 0..h {
        for x in 0..w {
            let px = y * w + x;
            if bits[px] == 0 {
                continue;
            }
            // neighbours already visited in scan order: W, NW, N, NE
            let mut min_label = u32::MAX;
            let mut neigh = [0u32; 4];
            let mut n = 0;
            if x > 0 && bits[px - 1] == 1 {
                neigh[n] = provisional[px - 1];
                n += 1;
            }
            if y > 0 {
                if x > 0 && bits[px - w - 1] == 1 {
                    neigh[n] = provisional[px - w - 1];
                    n += 1;
                }
                if bits[px - w] == 1 {
                    neigh[n] = provisional[px - w];
                    n += 1;
                }
                if x + 1 < w && bits[px - w + 1] == 1 {
                    neigh[n] = provisional[px - w + 1];
                    n += 1;
                }
            }
            for &label in &neigh[..n] {
                min_label = min_label.min(label);
            }
            if n == 0 {
                provisional[px] = next;
                parent.push(next);
                next += 1;
            } else {
                provisional[px] = min_label;
                for &label in &neigh[..n] {
                    let a = find(&mut parent, min_label);
                    let b = find(&mut parent, label);
                    if a != b {
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        parent[hi as usize] = lo;
                    }
                }
            }
        }
    }

    // second pass: compact roots into ids ordered by first appearance
    let mut remap = vec![0u32; next as usize];
    let mut count = 0u32;
    let mut labels = vec![0u32; w * h];
    for px in 0..w * h {
        if bits[px] == 0 {
            continue;
        }
        let root = find(&mut parent, provisional[px]);
        if remap[root as usize] == 0 {
            count += 1;
            remap[root as usize] = count;
        }
        labels[px] = remap[root as usize];
    }

    ComponentLabels {
        width: mask.width(),
        height: mask.height(),
        labels,
        count,
    }
}
