use std::fmt;

use crate::mask::{PixelBox, PixelCoord};

/// Click label: include (`positive`) or exclude (`negative`) the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "positive" => Some(Polarity::Positive),
            "negative" => Some(Polarity::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One agent decision. Coordinates are either raw pixels or `[0, 1000]`
/// normalized integers depending on where the action lives; see
/// [`super::coords`] for the conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    AddBox { bbox: [u32; 4] },
    AddPoint { point: [u32; 2], polarity: Polarity },
    Stop,
}

impl Action {
    pub const ADD_BBOX: &'static str = "add_bbox";
    pub const ADD_POINT: &'static str = "add_point";
    pub const STOP: &'static str = "stop_action";

    pub fn tool_name(&self) -> &'static str {
        match self {
            Action::AddBox { .. } => Self::ADD_BBOX,
            Action::AddPoint { .. } => Self::ADD_POINT,
            Action::Stop => Self::STOP,
        }
    }

    /// Whether the action invokes the segmentation tool (everything but stop).
    pub fn is_tool(&self) -> bool {
        !matches!(self, Action::Stop)
    }

    pub fn is_box(&self) -> bool {
        matches!(self, Action::AddBox { .. })
    }

    pub fn from_box(b: PixelBox) -> Self {
        Action::AddBox {
            bbox: [b.x1 as u32, b.y1 as u32, b.x2 as u32, b.y2 as u32],
        }
    }

    pub fn from_click(p: PixelCoord, polarity: Polarity) -> Self {
        Action::AddPoint {
            point: [p.x as u32, p.y as u32],
            polarity,
        }
    }

    /// Box corners as an ordered pixel box.
    pub fn pixel_box(&self) -> Option<PixelBox> {
        match *self {
            Action::AddBox { bbox: [x1, y1, x2, y2] } => Some(PixelBox::from_corners(
                PixelCoord::new(x1 as usize, y1 as usize),
                PixelCoord::new(x2 as usize, y2 as usize),
            )),
            _ => None,
        }
    }

    pub fn pixel_point(&self) -> Option<(PixelCoord, Polarity)> {
        match *self {
            Action::AddPoint {
                point: [x, y],
                polarity,
            } => Some((PixelCoord::new(x as usize, y as usize), polarity)),
            _ => None,
        }
    }

    /// Applies `f(value, is_x)` to every coordinate.
    pub fn map_coords<E>(&self, mut f: impl FnMut(u32, bool) -> Result<u32, E>) -> Result<Self, E> {
        Ok(match *self {
            Action::AddBox { bbox: [x1, y1, x2, y2] } => Action::AddBox {
                bbox: [f(x1, true)?, f(y1, false)?, f(x2, true)?, f(y2, false)?],
            },
            Action::AddPoint {
                point: [x, y],
                polarity,
            } => Action::AddPoint {
                point: [f(x, true)?, f(y, false)?],
                polarity,
            },
            Action::Stop => Action::Stop,
        })
    }
}
