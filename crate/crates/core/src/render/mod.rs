//! Deterministic SVG rendering of styled frames.
//!
//! Rendering is split into [`layout_frame`], which resolves every bar, contour
//! and ghost to canvas coordinates, and [`render_frame`], which prints that
//! layout as an SVG 1.1 document. Numbers are printed with six significant
//! digits and attributes in a fixed order, so identical inputs always give
//! identical bytes.

mod export;
mod svg;

pub use export::{export_animation, frame_file_name, BoundaryMark, Manifest, MANIFEST_FILE, MANIFEST_FORMAT};
pub use svg::fmt_num;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::Rgb;
use crate::compile::{max_visible_value, FrameState, KeyframeTimeline};
use crate::data::RankingDataset;
use crate::foreshadow::{ContourStyle, ForeshadowError, StyleOverlay};

/// Ten-color categorical palette, assigned to categories in first-appearance order.
pub const DEFAULT_PALETTE: [Rgb; 10] = [
    Rgb(0x4e, 0x79, 0xa7),
    Rgb(0xf2, 0x8e, 0x2b),
    Rgb(0xe1, 0x57, 0x59),
    Rgb(0x76, 0xb7, 0xb2),
    Rgb(0x59, 0xa1, 0x4f),
    Rgb(0xed, 0xc9, 0x48),
    Rgb(0xb0, 0x7a, 0xa1),
    Rgb(0xff, 0x9d, 0xa7),
    Rgb(0x9c, 0x75, 0x5f),
    Rgb(0xba, 0xb0, 0xac),
];

/// Fill for items whose category is missing from the palette.
pub const FALLBACK_COLOR: Rgb = Rgb(0x9e, 0x9e, 0x9e);

pub const GHOST_FILL_OPACITY: f64 = 0.35;
pub const GHOST_DASH: &str = "6 4";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("invalid canvas: {0}")]
    InvalidCanvas(&'static str),
    #[error("overlay has {overlay} item styles for {items} items")]
    OverlayMismatch { overlay: usize, items: usize },
    #[error(transparent)]
    Foreshadow(#[from] ForeshadowError),
    #[error("i/o failure at {path}: {message}")]
    IoFailure { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
    pub left: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Self {
            top: 72.0,
            right: 72.0,
            bottom: 24.0,
            left: 160.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryColor {
    pub category: String,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CanvasSpec {
    pub width: u32,
    pub height: u32,
    pub margins: Margins,
    pub bar_height_fraction: f64,
    pub title: String,
    pub category_palette: Vec<CategoryColor>,
}

impl Default for CanvasSpec {
    fn default() -> Self {
        Self {
            width: 960,
            height: 540,
            margins: Margins::default(),
            bar_height_fraction: 0.8,
            title: String::new(),
            category_palette: Vec::new(),
        }
    }
}

impl CanvasSpec {
    /// Default canvas with one palette entry per dataset category.
    pub fn for_dataset(dataset: &RankingDataset, title: impl Into<String>) -> Self {
        let mut canvas = CanvasSpec {
            title: title.into(),
            ..Default::default()
        };
        canvas.extend_palette(dataset);
        canvas
    }

    /// Appends colors for categories not yet in the palette, in the order
    /// they first appear in the dataset. Existing entries are kept.
    pub fn extend_palette(&mut self, dataset: &RankingDataset) {
        for item in dataset.items() {
            if self.color_for(&item.category).is_none() {
                let color = DEFAULT_PALETTE[self.category_palette.len() % DEFAULT_PALETTE.len()];
                self.category_palette.push(CategoryColor {
                    category: item.category.clone(),
                    color,
                });
            }
        }
    }

    pub fn color_for(&self, category: &str) -> Option<Rgb> {
        self.category_palette
            .iter()
            .find(|c| c.category == category)
            .map(|c| c.color)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let m = &self.margins;
        if [m.top, m.right, m.bottom, m.left]
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(RenderError::InvalidCanvas("margins must be finite and non-negative"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidCanvas("width and height must be positive"));
        }
        if self.chart_width() <= 0.0 || self.chart_height() <= 0.0 {
            return Err(RenderError::InvalidCanvas("margins leave no drawable area"));
        }
        if !(self.bar_height_fraction > 0.0 && self.bar_height_fraction < 1.0) {
            return Err(RenderError::InvalidCanvas("bar_height_fraction must be in (0, 1)"));
        }
        Ok(())
    }

    pub fn chart_left(&self) -> f64 {
        self.margins.left
    }

    pub fn chart_top(&self) -> f64 {
        self.margins.top
    }

    pub fn chart_width(&self) -> f64 {
        f64::from(self.width) - self.margins.left - self.margins.right
    }

    pub fn chart_height(&self) -> f64 {
        f64::from(self.height) - self.margins.top - self.margins.bottom
    }
}

/// Vertical placement of a 1-based, possibly fractional slot.
#[derive(Debug, Clone, Copy)]
struct SlotGeometry {
    top: f64,
    pitch: f64,
    bar_height: f64,
}

impl SlotGeometry {
    fn new(canvas: &CanvasSpec, top_n: usize) -> Self {
        let pitch = canvas.chart_height() / top_n as f64;
        Self {
            top: canvas.chart_top(),
            pitch,
            bar_height: pitch * canvas.bar_height_fraction,
        }
    }

    fn bar_y(&self, slot: f64) -> f64 {
        self.top + (slot - 1.0) * self.pitch + (self.pitch - self.bar_height) / 2.0
    }
}

fn bar_width(value: f64, max_value: f64, chart_width: f64) -> f64 {
    if max_value > 0.0 {
        value / max_value * chart_width
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarGeometry {
    pub item: usize,
    pub item_id: String,
    pub value: f64,
    pub slot_position: f64,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub fill: Rgb,
    pub opacity: f64,
    pub contours: Vec<ContourStyle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhostGeometry {
    pub item: usize,
    pub item_id: String,
    pub value: f64,
    pub slot_position: f64,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub fill: Rgb,
}

/// Everything drawn for one frame, in canvas pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayout {
    pub width: u32,
    pub height: u32,
    pub title: String,
    pub banner: Option<String>,
    pub period_label: String,
    /// Chart clip rectangle: (x, y, width, height).
    pub clip: (f64, f64, f64, f64),
    /// Back-to-front draw order.
    pub bars: Vec<BarGeometry>,
    pub ghosts: Vec<GhostGeometry>,
}

pub fn layout_frame(
    timeline: &KeyframeTimeline,
    frame: &FrameState,
    overlay: &StyleOverlay,
    canvas: &CanvasSpec,
) -> Result<FrameLayout, RenderError> {
    canvas.validate()?;
    if overlay.items.len() != frame.items.len() || frame.items.len() != timeline.items.len() {
        return Err(RenderError::OverlayMismatch {
            overlay: overlay.items.len(),
            items: frame.items.len(),
        });
    }
    let slots = SlotGeometry::new(canvas, timeline.settings.top_n);
    let chart_width = canvas.chart_width();
    let x0 = canvas.chart_left();
    let max_value = max_visible_value(&frame.items);
    let fill_of = |item: usize| {
        canvas
            .color_for(&timeline.items[item].category)
            .unwrap_or(FALLBACK_COLOR)
    };

    let mut order: Vec<usize> = (0..frame.items.len())
        .filter(|&i| frame.items[i].visible)
        .collect();
    // Lower slots first so higher-ranked bars paint on top.
    order.sort_by(|&a, &b| {
        frame.items[b]
            .slot_position
            .total_cmp(&frame.items[a].slot_position)
            .then(a.cmp(&b))
    });

    let bars = order
        .into_iter()
        .map(|i| {
            let state = &frame.items[i];
            let style = &overlay.items[i];
            BarGeometry {
                item: i,
                item_id: timeline.items[i].id.clone(),
                value: state.value,
                slot_position: state.slot_position,
                x: x0,
                y: slots.bar_y(state.slot_position),
                width: bar_width(state.value, max_value, chart_width),
                height: slots.bar_height,
                fill: fill_of(i),
                opacity: style.opacity,
                contours: style.contours.clone(),
            }
        })
        .collect();

    let ghosts = overlay
        .ghosts
        .iter()
        .map(|g| GhostGeometry {
            item: g.item,
            item_id: g.item_id.clone(),
            value: g.value,
            slot_position: g.slot_position,
            x: x0,
            y: slots.bar_y(g.slot_position),
            width: bar_width(g.value, g.reference_max, chart_width),
            height: slots.bar_height,
            fill: fill_of(g.item),
        })
        .collect();

    Ok(FrameLayout {
        width: canvas.width,
        height: canvas.height,
        title: canvas.title.clone(),
        banner: overlay.banner_text.clone(),
        period_label: timeline.period_labels[frame.nearest_period].clone(),
        clip: (0.0, canvas.chart_top(), f64::from(canvas.width), canvas.chart_height()),
        bars,
        ghosts,
    })
}

/// Renders one styled frame to an SVG document.
pub fn render_frame(
    timeline: &KeyframeTimeline,
    frame: &FrameState,
    overlay: &StyleOverlay,
    canvas: &CanvasSpec,
) -> Result<String, RenderError> {
    Ok(svg::write_svg(&layout_frame(timeline, frame, overlay, canvas)?))
}
