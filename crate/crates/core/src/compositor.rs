//! Rain-free frame generation.

use crate::error::{Error, Result};
use crate::frame::{ClassMap, Frame, Label};

/// Build the output frame by hard per-pixel selection: background and rain
/// pixels come from the background frame, object pixels from the current
/// frame. All channels of a pixel are sourced together; no blending.
pub fn compose(input: &Frame, background: &Frame, map: &ClassMap) -> Result<Frame> {
    input.ensure_same_shape(background)?;
    if input.width() != map.width() || input.height() != map.height() {
        return Err(Error::shape(
            (input.width(), input.height(), input.channels()),
            (map.width(), map.height(), input.channels()),
        ));
    }
    let channels = input.channels() as usize;
    let mut data = Vec::with_capacity(input.data().len());
    for (px, &label) in map.labels().iter().enumerate() {
        let src = match label {
            Label::Object => input.data(),
            Label::Background | Label::Rain => background.data(),
        };
        data.extend_from_slice(&src[px * channels..(px + 1) * channels]);
    }
    Frame::new(input.width(), input.height(), input.channels(), data)
}
